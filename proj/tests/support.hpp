#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "fixq/act_quant.hpp"
#include "fixq/random.hpp"
#include "fixq/tensor.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh, empty scratch directory for one test.
inline fs::path scratch_dir(const std::string& name) {
    const char* base = std::getenv("FIXQ_TMP");
    fs::path dir = (base && *base ? fs::path(base) : fs::temp_directory_path() / "fixq-tests") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// File name -> contents for every regular file in a directory.
inline std::map<std::string, std::vector<char>> dir_bytes(const fs::path& dir) {
    std::map<std::string, std::vector<char>> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out[e.path().filename().string()] = file_bytes(e.path());
    return out;
}

inline fixq::Tensor random_weight(fixq::Rng& rng, std::int64_t i, std::int64_t k, std::int64_t o, double scale) {
    std::vector<float> d(static_cast<std::size_t>(i * k * k * o));
    for (auto& v : d) v = static_cast<float>(rng.normal(0.0, scale));
    return fixq::Tensor::weight(i, k, k, o, std::move(d));
}

inline fixq::Tensor random_activation(fixq::Rng& rng, std::int64_t h, std::int64_t w, std::int64_t c, double scale,
                                      bool nonnegative = false) {
    std::vector<float> d(static_cast<std::size_t>(h * w * c));
    for (auto& v : d) {
        const double x = rng.normal(0.0, scale);
        v = static_cast<float>(nonnegative ? std::fabs(x) : x);
    }
    return fixq::Tensor::activation(h, w, c, std::move(d));
}

/// Activation tensor quantized with a profile calibrated on itself.
inline fixq::QuantizedTensor self_quantized(const fixq::Tensor& x, fixq::ActivationKind kind) {
    const std::vector<fixq::Tensor> cal{x};
    fixq::CalibrationProfile p = fixq::calibrate(cal, kind);
    return fixq::quantize_activations(x, p);
}

}  // namespace testing_support
