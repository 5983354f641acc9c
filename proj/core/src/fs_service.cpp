// In-memory file system behind the FS model's externs. Checks run in the
// same order as the model's pre-call returns, so every error code matches.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>

#include "gatekeeper/error.hpp"
#include "gatekeeper/frontend.hpp"
#include "gatekeeper/service.hpp"
#include "gatekeeper/trusted.hpp"

namespace gk {

namespace {

WideInt C(std::string_view name) { return *builtin_constant(name); }

class MemFs {
 public:
  struct Inode {
    std::vector<std::uint8_t> data;  // size == data.size()
    WideInt mode = 0;
  };
  struct Open {
    std::shared_ptr<Inode> ino;
    WideInt off = 0;
    WideInt flags = 0;
  };

  MemFs() {
    auto root = std::make_shared<Inode>();
    root->mode = C("S_IFDIR") | 0755;
    names_["/"] = root;
  }

  WideInt open(const std::string& path, WideInt flags, WideInt mode) {
    if (path.empty()) return -C("ENOENT");
    auto p = canon(path);
    if (!p) return -C("EINVAL");
    const WideInt acc = flags & C("O_ACCMODE");
    if (acc == C("O_ACCMODE")) return -C("EINVAL");
    auto it = names_.find(*p);
    std::shared_ptr<Inode> ino;
    if (it == names_.end()) {
      if ((flags & C("O_CREAT")) == 0) return -C("ENOENT");
      if (auto err = parent_error(*p)) return *err;
      ino = std::make_shared<Inode>();
      ino->mode = C("S_IFREG") | (mode & 0777 & (0777 ^ kUmask));
      names_[*p] = ino;
    } else {
      ino = it->second;
      if ((flags & C("O_CREAT")) != 0 && (flags & C("O_EXCL")) != 0) return -C("EEXIST");
      if (is_dir(*ino) && acc != C("O_RDONLY")) return -C("EISDIR");
      if (acc != C("O_WRONLY") && (ino->mode & 0400) == 0) return -C("EACCES");
      if (acc != C("O_RDONLY") && (ino->mode & 0200) == 0) return -C("EACCES");
      if ((flags & C("O_TRUNC")) != 0 && acc != C("O_RDONLY")) ino->data.clear();
    }
    WideInt fd = 3;
    while (fds_.count(fd) != 0) ++fd;
    fds_[fd] = Open{ino, 0, flags};
    return fd;
  }

  WideInt close(WideInt fd) {
    if (fds_.erase(fd) == 0) return -C("EBADF");
    return 0;
  }

  WideInt read(WideInt fd, Value& buf, WideInt cnt, std::optional<WideInt> at) {
    auto it = fds_.find(fd);
    if (it == fds_.end()) return -C("EBADF");
    Open& o = it->second;
    if ((o.flags & C("O_ACCMODE")) == C("O_WRONLY")) return -C("EBADF");
    if (is_dir(*o.ino)) return -C("EISDIR");
    auto& out = buf.mutable_bytes();
    if (static_cast<WideInt>(out.size()) < cnt) return -C("EINVAL");
    if (at && *at < 0) return -C("EINVAL");
    const WideInt off = at ? *at : o.off;
    const WideInt size = static_cast<WideInt>(o.ino->data.size());
    const WideInt n = off >= size ? 0 : std::min(cnt, size - off);
    std::copy_n(o.ino->data.begin() + static_cast<std::ptrdiff_t>(off), static_cast<std::size_t>(n), out.begin());
    if (!at) o.off += n;
    return n;
  }

  WideInt write(WideInt fd, const Value& buf, WideInt cnt, std::optional<WideInt> at) {
    auto it = fds_.find(fd);
    if (it == fds_.end()) return -C("EBADF");
    Open& o = it->second;
    if ((o.flags & C("O_ACCMODE")) == C("O_RDONLY")) return -C("EBADF");
    const auto& in = buf.as_bytes();
    if (static_cast<WideInt>(in.size()) < cnt) return -C("EINVAL");
    if (at && *at < 0) return -C("EINVAL");
    WideInt off = at ? *at : o.off;
    if (!at && (o.flags & C("O_APPEND")) != 0) off = static_cast<WideInt>(o.ino->data.size());
    auto& data = o.ino->data;
    if (static_cast<WideInt>(data.size()) < off + cnt) data.resize(static_cast<std::size_t>(off + cnt), 0);
    std::copy_n(in.begin(), static_cast<std::size_t>(cnt), data.begin() + static_cast<std::ptrdiff_t>(off));
    if (!at) o.off = off + cnt;
    return cnt;
  }

  WideInt lseek(WideInt fd, WideInt off, WideInt whence) {
    auto it = fds_.find(fd);
    if (it == fds_.end()) return -C("EBADF");
    Open& o = it->second;
    WideInt base = 0;
    if (whence == C("SEEK_SET")) base = 0;
    else if (whence == C("SEEK_CUR")) base = o.off;
    else if (whence == C("SEEK_END")) base = static_cast<WideInt>(o.ino->data.size());
    else return -C("EINVAL");
    if (base + off < 0) return -C("EINVAL");
    o.off = base + off;
    return o.off;
  }

  WideInt unlink(const std::string& path) {
    auto r = lookup(path);
    if (!r.ino) return r.err;
    if (is_dir(*r.ino)) return -C("EISDIR");
    names_.erase(r.path);
    return 0;
  }

  WideInt fstat(WideInt fd) {
    auto it = fds_.find(fd);
    if (it == fds_.end()) return -C("EBADF");
    return static_cast<WideInt>(it->second.ino->data.size());
  }

  WideInt lstat(const std::string& path) {
    auto r = lookup(path);
    if (!r.ino) return r.err;
    return static_cast<WideInt>(r.ino->data.size());
  }

  WideInt access(const std::string& path, WideInt amode) {
    if (path.empty()) return -C("ENOENT");
    if (amode < 0 || amode > 7) return -C("EINVAL");
    auto r = lookup(path);
    if (!r.ino) return r.err;
    if ((amode & C("R_OK")) != 0 && (r.ino->mode & 0400) == 0) return -C("EACCES");
    if ((amode & C("W_OK")) != 0 && (r.ino->mode & 0200) == 0) return -C("EACCES");
    if ((amode & C("X_OK")) != 0 && (r.ino->mode & 0100) == 0) return -C("EACCES");
    return 0;
  }

  WideInt mkdir(const std::string& path, WideInt mode) {
    if (path.empty()) return -C("ENOENT");
    auto p = canon(path);
    if (!p) return -C("EINVAL");
    if (names_.count(*p) != 0) return -C("EEXIST");
    if (auto err = parent_error(*p)) return *err;
    auto ino = std::make_shared<Inode>();
    ino->mode = C("S_IFDIR") | (mode & 0777 & (0777 ^ kUmask));
    names_[*p] = ino;
    return 0;
  }

  WideInt truncate(const std::string& path, WideInt length) {
    auto r = lookup(path);
    if (!r.ino) return r.err;
    if (is_dir(*r.ino)) return -C("EISDIR");
    if (length < 0) return -C("EINVAL");
    if ((r.ino->mode & 0200) == 0) return -C("EACCES");
    r.ino->data.resize(static_cast<std::size_t>(length), 0);
    return 0;
  }

  WideInt ftruncate(WideInt fd, WideInt length) {
    auto it = fds_.find(fd);
    if (it == fds_.end()) return -C("EBADF");
    if ((it->second.flags & C("O_ACCMODE")) == C("O_RDONLY")) return -C("EINVAL");
    if (length < 0) return -C("EINVAL");
    it->second.ino->data.resize(static_cast<std::size_t>(length), 0);
    return 0;
  }

  WideInt chmod(const std::string& path, WideInt mode) {
    auto r = lookup(path);
    if (!r.ino) return r.err;
    set_mode(*r.ino, mode);
    return 0;
  }

  WideInt fchmod(WideInt fd, WideInt mode) {
    auto it = fds_.find(fd);
    if (it == fds_.end()) return -C("EBADF");
    set_mode(*it->second.ino, mode);
    return 0;
  }

  WideInt rename(const std::string& from, const std::string& to) {
    if (from.empty() || to.empty()) return -C("ENOENT");
    auto op = canon(from);
    auto np = canon(to);
    if (!op || !np) return -C("EINVAL");
    auto it = names_.find(*op);
    if (it == names_.end()) return -C("ENOENT");
    if (is_dir(*it->second)) return -C("EISDIR");
    if (auto err = parent_error(*np)) return *err;
    auto dst = names_.find(*np);
    if (dst != names_.end() && is_dir(*dst->second)) return -C("EISDIR");
    if (*op == *np) return 0;
    names_[*np] = it->second;
    names_.erase(*op);
    return 0;
  }

  // Second name for an existing file; not part of the model's surface.
  WideInt link(const std::string& from, const std::string& to) {
    auto op = canon(from);
    auto np = canon(to);
    if (!op || !np || names_.count(*op) == 0) return -C("ENOENT");
    names_[*np] = names_[*op];
    return 0;
  }

 private:
  static constexpr WideInt kUmask = 022;

  struct Lookup {
    std::shared_ptr<Inode> ino;
    std::string path;
    WideInt err = 0;
  };

  static bool is_dir(const Inode& i) { return (i.mode & C("S_IFDIR")) != 0; }
  static void set_mode(Inode& i, WideInt mode) {
    i.mode = (i.mode & (C("S_IFDIR") | C("S_IFREG"))) | (mode & 07777);
  }

  static std::optional<std::string> canon(const std::string& path) {
    try {
      return trusted_canonicalize("/", path);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  Lookup lookup(const std::string& path) const {
    if (path.empty()) return {nullptr, "", -C("ENOENT")};
    auto p = canon(path);
    if (!p) return {nullptr, "", -C("EINVAL")};
    auto it = names_.find(*p);
    if (it == names_.end()) return {nullptr, *p, -C("ENOENT")};
    return {it->second, *p, 0};
  }

  std::optional<WideInt> parent_error(const std::string& p) const {
    auto it = names_.find(path_dirname(p));
    if (it == names_.end()) return -C("ENOENT");
    if (!is_dir(*it->second)) return -C("ENOTDIR");
    return std::nullopt;
  }

  std::map<std::string, std::shared_ptr<Inode>> names_;
  std::map<WideInt, Open> fds_;
};

Value W(WideInt v) { return Value::wide(v); }

}  // namespace

ServiceBinding correct_fs() {
  auto fs = std::make_shared<MemFs>();
  ServiceBinding b("correct_fs");
  b.retain(fs);
  auto* f = fs.get();
  b.bind("os_open", [f](std::vector<Value>& a) { return W(f->open(a[0].as_str(), a[1].as_int(), a[2].as_int())); });
  b.bind("os_close", [f](std::vector<Value>& a) { return W(f->close(a[0].as_int())); });
  b.bind("os_read", [f](std::vector<Value>& a) { return W(f->read(a[0].as_int(), a[1], a[2].as_int(), std::nullopt)); });
  b.bind("os_pread", [f](std::vector<Value>& a) { return W(f->read(a[0].as_int(), a[1], a[2].as_int(), a[3].as_int())); });
  b.bind("os_write", [f](std::vector<Value>& a) { return W(f->write(a[0].as_int(), a[1], a[2].as_int(), std::nullopt)); });
  b.bind("os_pwrite", [f](std::vector<Value>& a) { return W(f->write(a[0].as_int(), a[1], a[2].as_int(), a[3].as_int())); });
  b.bind("os_lseek", [f](std::vector<Value>& a) { return W(f->lseek(a[0].as_int(), a[1].as_int(), a[2].as_int())); });
  b.bind("os_unlink", [f](std::vector<Value>& a) { return W(f->unlink(a[0].as_str())); });
  b.bind("os_fstat", [f](std::vector<Value>& a) { return W(f->fstat(a[0].as_int())); });
  b.bind("os_lstat", [f](std::vector<Value>& a) { return W(f->lstat(a[0].as_str())); });
  b.bind("os_access", [f](std::vector<Value>& a) { return W(f->access(a[0].as_str(), a[1].as_int())); });
  b.bind("os_mkdir", [f](std::vector<Value>& a) { return W(f->mkdir(a[0].as_str(), a[1].as_int())); });
  b.bind("os_truncate", [f](std::vector<Value>& a) { return W(f->truncate(a[0].as_str(), a[1].as_int())); });
  b.bind("os_ftruncate", [f](std::vector<Value>& a) { return W(f->ftruncate(a[0].as_int(), a[1].as_int())); });
  b.bind("os_chmod", [f](std::vector<Value>& a) { return W(f->chmod(a[0].as_str(), a[1].as_int())); });
  b.bind("os_fchmod", [f](std::vector<Value>& a) { return W(f->fchmod(a[0].as_int(), a[1].as_int())); });
  b.bind("os_rename", [f](std::vector<Value>& a) { return W(f->rename(a[0].as_str(), a[1].as_str())); });
  b.bind("host_link", [f](std::vector<Value>& a) { return W(f->link(a[0].as_str(), a[1].as_str())); });
  return b;
}

}  // namespace gk
