#pragma once

#include "cegncde/tensor.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace testing {

inline cegncde::Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    cegncde::Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

inline double max_abs_diff(const cegncde::Mat& a, const cegncde::Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Fresh directory under the system temp dir, removed first if it exists.
inline std::string scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("cegncde_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testing
