#include "soprag/cli.hpp"

int main(int argc, char** argv) {
    return soprag::cli_main(argc, argv);
}
