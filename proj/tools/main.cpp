#include "tablekit/cli.hpp"

int main(int argc, char** argv) {
    return tablekit::cli::run_command({argv + 1, argv + argc});
}
