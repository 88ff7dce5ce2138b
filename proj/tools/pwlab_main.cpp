#include <pwlab/cli.hpp>

int main(int argc, char** argv) { return pwlab::cli_main(argc, argv); }
