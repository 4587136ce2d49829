#pragma once

#include <stdexcept>
#include <string>

namespace dol3
{

/// Root of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A numeric or enumerated argument is out of its admissible range.
class ParameterError : public Error
{
public:
    using Error::Error;
};

/// An operation was invoked in a state that forbids it (e.g. selling from an idle provider).
class StateError : public Error
{
public:
    using Error::Error;
};

class IndexError : public Error
{
public:
    using Error::Error;
};

/// A message arrived from an observer that is not a neighbour, or about an unknown pair.
class ProtocolError : public Error
{
public:
    using Error::Error;
};

class AvailabilityError : public Error
{
public:
    using Error::Error;
};

class ConstructionError : public Error
{
public:
    using Error::Error;
};

class DataError : public Error
{
public:
    using Error::Error;
};

class SchemaError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace dol3
