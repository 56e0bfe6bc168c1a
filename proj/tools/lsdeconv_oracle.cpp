// lsdeconv-oracle: regenerates the derived test fixtures from the
// brute-force reference implementations.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "oracles.hpp"

using json = nlohmann::json;
using lsdeconv::Volume;

namespace {

// deterministic small instance for the forward-model checksum; values are
// simple closed forms so the fixture does not depend on any production code
Volume formula_volume(int nx, int ny, int nz, double phase) {
    Volume v(nx, ny, nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                v.at(i, j, k) = 0.5 + 0.5 * std::sin(0.7 * i + 1.3 * j + 2.1 * k + phase);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cmd = argc > 1 ? argv[1] : "";
    std::string out = argc > 2 ? argv[2] : "tests/fixtures";
    if (cmd != "regen-fixtures") {
        std::cerr << "usage: lsdeconv-oracle regen-fixtures [out_dir]\n";
        return 2;
    }
    std::filesystem::create_directories(out);

    json fx;
    {
        auto [u, v] = oracle::grid_prox_kl(2.0, 1.0, 0.5);
        fx["prox_kl_2_1_g05"] = {{"u", u}, {"v", v}};
    }
    {
        auto [u, v] = oracle::grid_prox_kl(1.0, 1.0, 1.0);
        fx["prox_kl_1_1_g1"] = {{"u", u}, {"v", v}};
    }
    fx["conj_kl_03_m02_box"] = oracle::grid_conj_kl(0.3, -0.2, 0.01, 10.0);
    fx["mc_mean_F_beta1000"] = oracle::monte_carlo_mean_F(1000.0, 100000, 99);
    {
        Volume l = formula_volume(8, 8, 4, 0.0);
        Volume h = formula_volume(8, 8, 4, 1.0);
        Volume u = formula_volume(8, 8, 4, 2.0);
        Volume f = oracle::naive_apply_L(l, h, u, 1.0);
        fx["naive_apply_checksum"] = f.sum();
        fx["naive_apply_center"] = f.at(4, 4, 2);
    }

    std::ofstream os(std::filesystem::path(out) / "derived.json");
    os << fx.dump(2) << "\n";
    std::cout << "wrote " << (std::filesystem::path(out) / "derived.json").string() << "\n";
    return 0;
}
