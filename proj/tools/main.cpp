#include <string>
#include <vector>

#include "mixdecon/cli.hpp"

int main(int argc, char** argv) {
    return mixdecon::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
