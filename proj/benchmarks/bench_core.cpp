#include <benchmark/benchmark.h>

#include <random>

#include "thetarbm/rbm.hpp"
#include "thetarbm/rotation.hpp"
#include "thetarbm/svm.hpp"
#include "thetarbm/trainer.hpp"

using namespace thetarbm;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
    return m;
}

const std::vector<double> kQuarter{0.0, 90.0, 180.0, 270.0};

void BM_RotateRows(benchmark::State& state) {
    const Matrix w = random_matrix(state.range(0), 784, 1);
    const auto table = make_rotation_table(90.0, 28, RotationMode::exact);
    Matrix out(w.rows(), w.cols());
    for (auto _ : state) {
        rotate_rows_into(w, table, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RotateRows)->Arg(100)->Arg(400);

void BM_CdGradient(benchmark::State& state) {
    const SupportSet set(kQuarter, 28, RotationMode::exact);
    TrainConfig cfg;
    cfg.hidden = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    const auto m = init_model(cfg, set, cfg.hidden, rng);
    Batch batch;
    batch.v = random_matrix(100, 784, 3);
    for (int i = 0; i < 100; ++i) batch.slice.push_back(i % 4);
    for (auto _ : state) benchmark::DoNotOptimize(cd_gradient(m, batch, {}, rng));
}
BENCHMARK(BM_CdGradient)->Arg(100);

void BM_ShareGradients(benchmark::State& state) {
    const SupportSet set(kQuarter, 28, RotationMode::exact);
    const Matrix g = random_matrix(100, 784, 4);
    for (auto _ : state) {
        std::vector<Matrix> dW(4, Matrix::Zero(100, 784));
        dW[1] = g;
        share_gradients(dW, {false, true, false, false}, set);
        benchmark::DoNotOptimize(dW[3].data());
    }
}
BENCHMARK(BM_ShareGradients);

void BM_KernelRow(benchmark::State& state) {
    const Matrix pts = random_matrix(state.range(0), 100, 5);
    for (auto _ : state) {
        KernelCache cache(pts, 0.02, 1);
        benchmark::DoNotOptimize(cache.row(0).data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KernelRow)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
