#include "staug_cli.hpp"

int main(int argc, char** argv) {
    return staug::cli::run(std::vector<std::string>(argv, argv + argc));
}
