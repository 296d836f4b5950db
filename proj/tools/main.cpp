#include "grsvrg/experiment.hpp"

int main(int argc, char** argv) { return grsvrg::cli_main(argc, argv); }
