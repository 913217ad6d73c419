#include "qpkam/cli.hpp"

int main(int argc, char** argv) { return qpkam::cli_main(argc, argv); }
