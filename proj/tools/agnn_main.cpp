#include "agnn/cli.hpp"

int main(int argc, char** argv) { return agnn::run_cli(argc, argv); }
