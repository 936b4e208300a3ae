#include "mexp/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria runner"};
    std::vector<int> ids;
    app.add_option("--criterion", ids, "criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);
    if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    bool all = true;
    for (int id : ids) {
        const auto r = mexp::run_criterion(id);
        std::cout << mexp::format_result(r) << std::endl;
        all = all && r.pass;
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
