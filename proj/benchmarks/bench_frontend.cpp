#include <benchmark/benchmark.h>

#include "gatekeeper/frontend.hpp"
#include "gatekeeper/models.hpp"

namespace {

void BM_CompileFsModel(benchmark::State& state) {
  const std::string_view src = gk::bundled_model_source("fs");
  for (auto _ : state) benchmark::DoNotOptimize(gk::compile(src, "fs"));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_CompileFsModel);

void BM_PrettyPrintFsModel(benchmark::State& state) {
  auto program = gk::load_bundled("fs");
  for (auto _ : state) benchmark::DoNotOptimize(gk::pretty_print(program->program));
}
BENCHMARK(BM_PrettyPrintFsModel);

}  // namespace
