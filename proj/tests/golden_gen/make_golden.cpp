// Regenerates the committed golden fixtures. Weight levels come from the
// scalar oracle and the inference code is checked against the rational
// chain before anything is written.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fixq/bundle.hpp"
#include "fixq/catalog.hpp"
#include "fixq/pipeline.hpp"
#include "fixq/cli.hpp"
#include "oracle/scalar.hpp"
#include "toy_net.hpp"

namespace fs = std::filesystem;
using namespace fixq;

namespace {

QuantizedTensor oracle_weights(const Tensor& t) {
    QuantizedTensor q;
    q.shape = t.shape();
    q.roles = t.roles();
    q.scheme = GroupScheme::ChannelWise;
    q.codebook_id = "weight-nlq-n8";
    const auto grid = oracle::weight_nlq8_grid();
    const auto O = static_cast<std::size_t>(t.channels());
    std::vector<int> e(O);
    for (std::size_t o = 0; o < O; ++o) {
        double m = 0.0;
        for (std::size_t i = o; i < t.size(); i += O) m = std::max(m, std::fabs(double(t[i])));
        e[o] = oracle::sf_exponent(m, -1);
        q.sf_exponents.push_back(static_cast<std::int8_t>(e[o]));
    }
    for (std::size_t i = 0; i < t.size(); ++i)
        q.levels.push_back(static_cast<std::uint8_t>(
            oracle::grid_index(grid, oracle::weight_nlq8(std::ldexp(double(t[i]), e[i % O])))));
    return q;
}

int run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int rc = cli::run(args, out, err);
    if (rc != 0) std::cerr << err.str();
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(FIXQ_GOLDEN_DIR);
    fs::create_directories(dir);

    std::ofstream(dir / "catalog.txt", std::ios::binary) << dump_catalog();

    const TensorBundle weights = toy_net::weights();
    write_bundle(weights, dir / "toy_weights");

    TensorBundle q8 = weights;
    for (BundleEntry& e : q8.entries) e.value = oracle_weights(e.tensor());
    write_bundle(q8, dir / "toy_weights_q8");

    TensorBundle images;
    const auto cal = toy_net::calibration_images();
    for (std::size_t i = 0; i < cal.size(); ++i) images.add("img" + std::to_string(i), cal[i]);
    write_bundle(images, dir / "calib_images");

    TensorBundle demo;
    demo.add("demo", toy_net::demo_input());
    write_bundle(demo, dir / "demo_input");

    const auto net = load_network(weights);
    const TensorBundle profiles = calibrate_network(net, cal);
    write_bundle(profiles, dir / "toy_profiles");

    const PipelineResult r = pipeline_demo(toy_net::demo_input(), net, profiles);
    if (r.y_hat != toy_net::oracle_y_hat(toy_net::demo_input(), net, profiles)) {
        std::cerr << "fixed-point pipeline disagrees with the rational chain; golden not written\n";
        return 1;
    }
    return run_cli({"infer", "--weights", (dir / "toy_weights").string(), "--profiles",
                    (dir / "toy_profiles").string(), "--input", (dir / "demo_input").string(), "--out",
                    (dir / "demo_y_hat").string()});
}
