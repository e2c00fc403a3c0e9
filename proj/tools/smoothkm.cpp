#include "smoothkm/cli.hpp"

int main(int argc, char** argv) { return smoothkm::cli_run(argc, argv); }
