#include "qscore/cli.hpp"

int main(int argc, char** argv) { return qscore::cli::run_main(argc, argv); }
