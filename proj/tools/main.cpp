#include "distill/cli.hpp"

int main(int argc, char** argv) {
    return distill::cli_main({argv + 1, argv + argc});
}
