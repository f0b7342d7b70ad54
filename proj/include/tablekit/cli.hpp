#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tablekit::cli {

/// Everything a pipeline invocation needs, assembled from command-line
/// flags. Constructors of subcommand handlers validate ranges (stride in
/// {1,2,4,8}, thresholds in [0,1]).
struct RunConfig {
    int stride = 4;
    double center_threshold = 0.3;
    double vertex_threshold = 0.3;
    int max_peaks = 2000;
    double tau_factor = 0.75;
    double merge_tol = 3.0;
    std::vector<double> iou_grid{0.6, 0.7, 0.8, 0.9};
    std::uint64_t seed = 0;
    int threads = 0;
};

/// Full command-line entry point; argv excludes the program name. Returns
/// the process exit code: 0 success, 1 metric or selftest failure, 2 input
/// or usage error. Errors are printed to stderr prefixed with
/// "tablekit: error:".
int run_command(const std::vector<std::string>& argv);

}  // namespace tablekit::cli
