// Compares the three observer models on a small market whose best provider
// changes halfway through.

#include <iomanip>
#include <iostream>

#include "dol3/dol3.hpp"

int main()
{
    dol3::SimConfig c;
    c.consumers = 10;
    c.observers = 4;
    c.providers = 5;
    c.iterations = 1000;
    c.reset_period = 100;
    c.explore_prob = 0.05;
    c.stock_max = 5;
    c.refill = 10;
    c.network = dol3::parse_network_spec("small_world(k=2,beta=0.1)");
    c.visibility.rule = dol3::VisibilityRule::Random{3};
    c.provider_processes = {
        dol3::quality::PeriodicSwitch{500, {0.9, 0.1}},
        dol3::quality::Constant{0.7},
        dol3::quality::Constant{0.5},
        dol3::quality::Constant{0.3},
        dol3::quality::PeriodicSwitch{500, {0.1, 0.9}},
    };
    c.models = {dol3::ModelKind::Dol3, dol3::ModelKind::Frequency, dol3::ModelKind::Random};

    const auto mc = dol3::monte_carlo(c, 20, 1);
    std::cout << std::fixed << std::setprecision(1);
    for (const auto& s : mc.stats)
    {
        std::cout << std::setw(10) << s.model << "  mean " << s.mean << "  sd " << s.stdev << "  range [" << s.min
                  << ", " << s.max << "]\n";
    }
    std::cout << "dol3 beats frequency in " << 100 * mc.win_rate[0][1] << "% of runs\n";
}
