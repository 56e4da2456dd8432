#include "qkext/harness.hpp"

int main(int argc, char** argv) {
    return qkext::harness::cli_main(argc, argv);
}
