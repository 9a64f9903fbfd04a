#include <iostream>

#include "propsim/cli.hpp"

int main(int argc, char** argv) {
    const auto parsed = propsim::cli::parse_args(argc, argv, std::cout, std::cerr);
    if (!parsed.command) return parsed.exit_code;
    return propsim::cli::execute(*parsed.command, std::cout, std::cerr);
}
