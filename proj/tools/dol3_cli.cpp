#include <iostream>
#include <string>
#include <vector>

#include "dol3/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return dol3::run_cli(args, std::cout, std::cerr);
}
