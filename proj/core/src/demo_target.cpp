// A toy protection layer over the FS service. Its shadow table is indexed by
// whatever descriptor the service hands back, which is the flaw raw
// campaigns are expected to expose.

#include <array>
#include <map>

#include "gatekeeper/error.hpp"
#include "gatekeeper/fuzz.hpp"

namespace gk {

namespace {

constexpr std::size_t kShadowSlots = 1024;

class ShadowTagFs final : public FuzzTarget {
 public:
  std::string name() const override { return "shadow-tag-fs"; }

  void run(const TestScript& scenario, ServiceBinding& service) override {
    slots_ = {};
    tags_.clear();
    Bindings bound;
    for (const auto& st : scenario.steps) {
      std::vector<Value> args = resolve_args(st, bound);
      WideInt r = step(st.action, args, service);
      if (st.bind) bound[*st.bind] = Value::wide(r);
    }
  }

 private:
  struct Slot {
    bool live = false;
    std::string path;
    WideInt off = 0;
  };

  Slot& slot(WideInt fd) {
    if (fd < 0 || fd >= static_cast<WideInt>(kShadowSlots)) {
      throw TargetFault("shadow-table-oob", "descriptor " + std::to_string(static_cast<long long>(fd)));
    }
    return slots_[static_cast<std::size_t>(fd)];
  }

  static WideInt as_int(const Value& v) { return v.as_int(); }

  WideInt step(const std::string& action, std::vector<Value>& args, ServiceBinding& service) {
    const std::string fn = "os_" + action;
    WideInt r = as_int(service.call(fn, args));
    if (action == "open") {
      if (r < 0) return r;
      Slot& s = slot(r);
      if (s.live) {
        throw TargetFault("shadow-slot-reuse", "descriptor " + std::to_string(static_cast<long long>(r)) +
                                                   " already bound to " + s.path);
      }
      s = Slot{true, args[0].as_str(), 0};
      if ((as_int(args[1]) & *builtin_constant("O_TRUNC")) != 0) tags_[s.path] = 0;
      tags_.try_emplace(s.path, 0);
    } else if (action == "close") {
      if (r == 0) slot(as_int(args[0])).live = false;
    } else if (action == "read" || action == "write") {
      if (r < 0) return r;
      const WideInt cnt = as_int(args[2]);
      if (r > cnt || r > static_cast<WideInt>(args[1].as_bytes().size())) {
        throw TargetFault(action + "-overflow", "service reported " + std::to_string(static_cast<long long>(r)) +
                                                    " bytes for a " + std::to_string(static_cast<long long>(cnt)) +
                                                    "-byte buffer");
      }
      Slot& s = slot(as_int(args[0]));
      if (!s.live) throw TargetFault("shadow-unbound-fd", "no shadow entry");
      WideInt& tag = tags_[s.path];
      if (action == "write") {
        s.off += r;
        tag = std::max(tag, s.off);
      } else {
        if (s.off + r > tag) throw TargetFault("tag-size-mismatch", "read past the tagged size of " + s.path);
        s.off += r;
      }
    } else if (action == "lseek") {
      if (r >= 0) slot(as_int(args[0])).off = r;
    } else if (action == "ftruncate" || action == "truncate") {
      if (r == 0) {
        const std::string path = action == "truncate" ? args[0].as_str() : slot(as_int(args[0])).path;
        tags_[path] = as_int(args[1]);
      }
    } else if (action == "unlink") {
      if (r == 0) tags_.erase(args[0].as_str());
    }
    return r;
  }

  std::array<Slot, kShadowSlots> slots_{};
  std::map<std::string, WideInt> tags_;
};

}  // namespace

std::unique_ptr<FuzzTarget> make_shadow_tag_fs() { return std::make_unique<ShadowTagFs>(); }

}  // namespace gk
