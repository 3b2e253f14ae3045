#include "kbpot/cli.hpp"

int main(int argc, char** argv) { return kbpot::cli::kbpot_main(argc, argv); }
