// Command-line entry point; all logic lives in llbar/cli.hpp.
#include <iostream>
#include <string>
#include <vector>

#include "llbar/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return llbar::run_cli(args, std::cout, std::cerr);
}
