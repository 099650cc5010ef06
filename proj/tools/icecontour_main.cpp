#include "icecontour/pipeline.hpp"

int main(int argc, char** argv) { return icecontour::run_cli(argc, argv); }
