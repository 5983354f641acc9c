// Per-call cost of each engine on the read/write path: raw service, the
// validator in front of it, and the mock.

#include <benchmark/benchmark.h>

#include "gatekeeper/mock.hpp"
#include "gatekeeper/models.hpp"
#include "gatekeeper/service.hpp"
#include "gatekeeper/validator.hpp"

namespace {

using gk::Value;

constexpr std::int64_t kOpenFlags = 64 | 2;  // O_CREAT | O_RDWR

std::vector<Value> open_args() { return {Value::str("/bench"), Value::wide(kOpenFlags), Value::wide(0644)}; }
std::vector<Value> io_args(gk::WideInt fd, std::size_t n) {
  return {Value::wide(fd), Value::bytes(std::vector<std::uint8_t>(n, 0xab)), Value::wide(static_cast<gk::WideInt>(n))};
}
std::vector<Value> rewind_args(gk::WideInt fd) { return {Value::wide(fd), Value::wide(0), Value::wide(0)}; }

void BM_RawServiceWriteRead(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  gk::ServiceBinding fs = gk::correct_fs();
  auto a = open_args();
  const gk::WideInt fd = fs.call("os_open", a).as_int();
  for (auto _ : state) {
    auto w = io_args(fd, n);
    fs.call("os_write", w);
    auto s = rewind_args(fd);
    fs.call("os_lseek", s);
    auto r = io_args(fd, n);
    fs.call("os_read", r);
    fs.call("os_lseek", s);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 2 * state.range(0));
}
BENCHMARK(BM_RawServiceWriteRead)->Arg(64)->Arg(4096);

void BM_ValidatedWriteRead(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  gk::ValidatorSession v(gk::load_bundled("fs"), gk::correct_fs());
  const gk::WideInt fd = v.invoke("open", open_args()).ret.as_int();
  for (auto _ : state) {
    v.invoke("write", io_args(fd, n));
    v.invoke("lseek", rewind_args(fd));
    v.invoke("read", io_args(fd, n));
    v.invoke("lseek", rewind_args(fd));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 2 * state.range(0));
}
BENCHMARK(BM_ValidatedWriteRead)->Arg(64)->Arg(4096);

void BM_MockWriteRead(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  gk::MockSession m(gk::load_bundled("fs"));
  const gk::WideInt fd = m.invoke("open", open_args()).ret.as_int();
  for (auto _ : state) {
    m.invoke("write", io_args(fd, n));
    m.invoke("lseek", rewind_args(fd));
    m.invoke("read", io_args(fd, n));
    m.invoke("lseek", rewind_args(fd));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 2 * state.range(0));
}
BENCHMARK(BM_MockWriteRead)->Arg(64)->Arg(4096);

void BM_ValidatedLockUnlock(benchmark::State& state) {
  gk::ValidatorSession v(gk::load_bundled("sync"), gk::correct_sync());
  v.invoke("mutex_init", {Value::wide(1), Value::wide(0)});
  for (auto _ : state) {
    v.invoke("mutex_lock", {Value::wide(1), Value::wide(1)});
    v.invoke("mutex_unlock", {Value::wide(1), Value::wide(1)});
  }
}
BENCHMARK(BM_ValidatedLockUnlock);

}  // namespace
