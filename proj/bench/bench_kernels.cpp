// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "support.hpp"
#include "trajkit/dataset.hpp"
#include "trajkit/kernels.hpp"

using namespace trajkit;
namespace k = trajkit::kernels;

namespace {

std::vector<k::NgramProfile> profiles(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<k::NgramProfile> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string text;
    for (int w = testing::uniform_int(rng, 4, 14); w > 0; --w) text += testing::random_word(rng, 2, 5) + " ";
    out.push_back(k::make_profile(text, 3));
  }
  return out;
}

std::vector<std::vector<double>> vectors(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (auto& v : out) {
    for (auto& x : v) x = d(rng);
    v = k::normalized(v);
  }
  return out;
}

std::vector<TrajTree> trees(int count) {
  std::mt19937_64 rng(11);
  std::vector<TrajTree> out;
  for (int i = 0; i < count; ++i) {
    const auto t = testing::synthetic_trajectory("b" + std::to_string(i), 9, rng, true);
    out.push_back(testing::synthetic_tree(t, 9, rng));
  }
  return out;
}

template <bool Parallel>
void BM_Overlap(benchmark::State& state) {
  const auto rows = profiles(static_cast<std::size_t>(state.range(0)), 1);
  const auto cols = profiles(369, 2);
  for (auto _ : state) {
    auto m = Parallel ? k::overlap_matrix(rows, cols) : k::overlap_matrix_serial(rows, cols);
    benchmark::DoNotOptimize(m.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 369);
}

template <bool Parallel>
void BM_Cosine(benchmark::State& state) {
  const auto rows = vectors(static_cast<std::size_t>(state.range(0)), 256, 3);
  const auto cols = vectors(369, 256, 4);
  for (auto _ : state) {
    auto m = Parallel ? k::cosine_matrix(rows, cols) : k::cosine_matrix_serial(rows, cols);
    benchmark::DoNotOptimize(m.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 369);
}

template <bool Parallel>
void BM_Flatten(benchmark::State& state) {
  const auto ts = trees(static_cast<int>(state.range(0)));
  const auto sel = BoostSelection::from_scaling_factor(10, 1);
  for (auto _ : state) {
    auto inst = Parallel ? flatten_corpus(ts, sel) : flatten_corpus_serial(ts, sel);
    benchmark::DoNotOptimize(inst.data());
  }
}

}  // namespace

BENCHMARK(BM_Overlap<false>)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Overlap<true>)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cosine<false>)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cosine<true>)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Flatten<false>)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Flatten<true>)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
