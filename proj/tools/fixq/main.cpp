#include <iostream>

#include "fixq/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fixq::cli::run(args, std::cout, std::cerr);
}
