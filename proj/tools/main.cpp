#include "tandem/cli.hpp"

int main(int argc, char** argv) { return tandem::dispatch(argc, argv); }
