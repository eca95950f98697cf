#include "adaptrial/cli.hpp"

int main(int argc, char** argv) { return adaptrial::cli_run(argc, argv); }
