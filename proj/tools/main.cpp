#include "cli.hpp"

int main(int argc, char** argv) {
    return stopflow::run_cli(std::vector<std::string>(argv, argv + argc));
}
