#include "scorefold/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return scorefold::cli::run(argc, argv, std::cout, std::cerr);
}
