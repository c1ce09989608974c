#include <iostream>
#include <string>
#include <vector>

#include "impforecast/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return impforecast::run_cli(args, std::cout, std::cerr);
}
