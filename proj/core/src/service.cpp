#include "gatekeeper/service.hpp"

#include "gatekeeper/error.hpp"
#include "gatekeeper/trusted.hpp"

namespace gk {

ServiceBinding::ServiceBinding() : counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

ServiceBinding::ServiceBinding(std::string name) : ServiceBinding() { name_ = std::move(name); }

void ServiceBinding::bind(std::string fn, ExternFn impl) { table_[std::move(fn)] = std::move(impl); }

bool ServiceBinding::has(std::string_view fn) const { return table_.find(fn) != table_.end(); }

const ExternFn& ServiceBinding::routine(std::string_view fn) const {
  auto it = table_.find(fn);
  if (it == table_.end()) {
    throw Error(ErrorCode::ServiceUnavailable, "service '" + name_ + "' has no routine '" + std::string(fn) + "'");
  }
  return it->second;
}

std::vector<std::string> ServiceBinding::functions() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : table_) out.push_back(k);
  return out;
}

Value ServiceBinding::call(std::string_view fn, std::vector<Value>& args) const {
  const ExternFn& impl = routine(fn);
  Value ret = impl(args);
  const std::uint64_t index = counter_->fetch_add(1);
  if (injector_) injector_(CallInfo{index, fn}, args, ret);
  return ret;
}

void ServiceBinding::set_fault_injector(FaultInjector injector) { injector_ = std::move(injector); }

void ServiceBinding::require_complete(const TypedModelProgram& program) const {
  for (const auto& [name, info] : program.actions) {
    if (!info.untrusted_fn.empty() && !has(info.untrusted_fn)) {
      throw Error(ErrorCode::ServiceUnavailable, "service '" + name_ + "' does not provide '" +
                                                     info.untrusted_fn + "' required by action '" + name + "'");
    }
  }
}

}  // namespace gk
