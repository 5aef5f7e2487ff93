#include "calmap/netcdf.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace calmap::nc {

namespace {

constexpr int32_t kTagDim = 0x0A;
constexpr int32_t kTagVar = 0x0B;
constexpr int32_t kTagAtt = 0x0C;

size_t pad4(size_t n) { return (n + 3) & ~size_t(3); }

size_t type_size(Type t) {
  switch (t) {
    case kByte:
    case kChar:
      return 1;
    case kShort:
      return 2;
    case kInt:
    case kFloat:
      return 4;
    case kDouble:
      return 8;
  }
  throw CorruptFileError("unknown nc type");
}

struct Writer {
  std::string buf;

  void u8(uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void i32(int32_t v) {
    for (int s = 24; s >= 0; s -= 8) u8(static_cast<uint8_t>((static_cast<uint32_t>(v) >> s) & 0xff));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int s = 56; s >= 0; s -= 8) u8(static_cast<uint8_t>((bits >> s) & 0xff));
  }
  void name(const std::string& s) {
    i32(static_cast<int32_t>(s.size()));
    buf.append(s);
    while (buf.size() % 4) u8(0);
  }
  void raw_pad(const std::string& s) {
    buf.append(s);
    while (buf.size() % 4) u8(0);
  }
};

void write_attr(Writer& w, const std::string& name, const Attr& a) {
  w.name(name);
  switch (a.kind) {
    case Attr::kStr:
      w.i32(kChar);
      w.i32(static_cast<int32_t>(a.s.size()));
      w.raw_pad(a.s);
      break;
    case Attr::kNum:
      w.i32(kDouble);
      w.i32(static_cast<int32_t>(a.num.size()));
      for (double v : a.num) w.f64(v);
      break;
    case Attr::kIntv:
      w.i32(kInt);
      w.i32(static_cast<int32_t>(a.iv.size()));
      for (int32_t v : a.iv) w.i32(v);
      break;
  }
}

void write_attr_list(Writer& w, const std::vector<std::pair<std::string, Attr>>& attrs) {
  if (attrs.empty()) {
    w.i32(0);
    w.i32(0);
    return;
  }
  w.i32(kTagAtt);
  w.i32(static_cast<int32_t>(attrs.size()));
  for (const auto& [n, a] : attrs) write_attr(w, n, a);
}

size_t attr_bytes(const std::string& name, const Attr& a) {
  size_t n = 4 + pad4(name.size()) + 8;
  switch (a.kind) {
    case Attr::kStr:
      return n + pad4(a.s.size());
    case Attr::kNum:
      return n + 8 * a.num.size();
    case Attr::kIntv:
      return n + 4 * a.iv.size();
  }
  return n;
}

struct Reader {
  std::string data;
  size_t pos = 0;
  std::string path;

  void need(size_t n) const {
    if (pos + n > data.size())
      throw CorruptFileError(path + ": truncated file (needed " + std::to_string(n) +
                             " bytes at offset " + std::to_string(pos) + ")");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data[pos++]);
  }
  int32_t i32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<uint8_t>(data[pos++]);
    return static_cast<int32_t>(v);
  }
  double f64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<uint8_t>(data[pos++]);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string name() {
    int32_t n = i32();
    if (n < 0 || n > (1 << 20)) throw CorruptFileError(path + ": bad name length");
    need(pad4(n));
    std::string s = data.substr(pos, n);
    pos += pad4(n);
    return s;
  }
};

Attr read_attr(Reader& r, std::string& name_out) {
  name_out = r.name();
  int32_t type = r.i32();
  int32_t n = r.i32();
  if (n < 0) throw CorruptFileError(r.path + ": negative attribute length");
  Attr a;
  switch (type) {
    case kChar: {
      a.kind = Attr::kStr;
      r.need(pad4(n));
      a.s = r.data.substr(r.pos, n);
      r.pos += pad4(n);
      break;
    }
    case kDouble: {
      a.kind = Attr::kNum;
      for (int i = 0; i < n; ++i) a.num.push_back(r.f64());
      break;
    }
    case kInt: {
      a.kind = Attr::kIntv;
      for (int i = 0; i < n; ++i) a.iv.push_back(r.i32());
      break;
    }
    case kFloat: {
      a.kind = Attr::kNum;
      for (int i = 0; i < n; ++i) {
        r.need(4);
        uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v = (v << 8) | static_cast<uint8_t>(r.data[r.pos++]);
        float f;
        std::memcpy(&f, &v, 4);
        a.num.push_back(f);
      }
      break;
    }
    default:
      throw CorruptFileError(r.path + ": unsupported attribute type " + std::to_string(type));
  }
  return a;
}

}  // namespace

int File::add_dim(const std::string& name, int size) {
  if (size <= 0) throw DimensionMismatchError("dimension " + name + " must be positive");
  dims.push_back({name, size});
  return static_cast<int>(dims.size()) - 1;
}

int File::dim_id(const std::string& name) const {
  for (size_t i = 0; i < dims.size(); ++i)
    if (dims[i].name == name) return static_cast<int>(i);
  return -1;
}

Variable& File::add_double(const std::string& name, std::vector<int> dim_ids,
                           std::vector<double> data) {
  Variable v;
  v.name = name;
  v.type = kDouble;
  v.dim_ids = std::move(dim_ids);
  if (v.count(dims) != static_cast<int64_t>(data.size()))
    throw DimensionMismatchError("variable " + name + ": data size does not match dims");
  v.dbl = std::move(data);
  vars.push_back(std::move(v));
  return vars.back();
}

Variable& File::add_int(const std::string& name, std::vector<int> dim_ids,
                        std::vector<int32_t> data) {
  Variable v;
  v.name = name;
  v.type = kInt;
  v.dim_ids = std::move(dim_ids);
  if (v.count(dims) != static_cast<int64_t>(data.size()))
    throw DimensionMismatchError("variable " + name + ": data size does not match dims");
  v.i32 = std::move(data);
  vars.push_back(std::move(v));
  return vars.back();
}

Variable& File::add_byte(const std::string& name, std::vector<int> dim_ids,
                         std::vector<int8_t> data) {
  Variable v;
  v.name = name;
  v.type = kByte;
  v.dim_ids = std::move(dim_ids);
  if (v.count(dims) != static_cast<int64_t>(data.size()))
    throw DimensionMismatchError("variable " + name + ": data size does not match dims");
  v.i8 = std::move(data);
  vars.push_back(std::move(v));
  return vars.back();
}

const Variable* File::find(const std::string& name) const {
  for (const auto& v : vars)
    if (v.name == name) return &v;
  return nullptr;
}

const Variable& File::require(const std::string& name) const {
  const Variable* v = find(name);
  if (!v) throw DimensionMismatchError("variable " + name + " not present in file");
  return *v;
}

std::vector<int> File::var_shape(const Variable& v) const {
  std::vector<int> s;
  for (int id : v.dim_ids) s.push_back(dims[id].size);
  return s;
}

std::optional<std::string> File::gattr_str(const std::string& name) const {
  for (const auto& [n, a] : gattrs)
    if (n == name && a.kind == Attr::kStr) return a.s;
  return std::nullopt;
}

std::optional<double> File::gattr_real(const std::string& name) const {
  for (const auto& [n, a] : gattrs) {
    if (n != name) continue;
    if (a.kind == Attr::kNum && !a.num.empty()) return a.num[0];
    if (a.kind == Attr::kIntv && !a.iv.empty()) return a.iv[0];
  }
  return std::nullopt;
}

void File::put_tensor(const std::string& name, const Tensor& t,
                      const std::vector<std::string>& dim_names) {
  if (static_cast<int>(dim_names.size()) != t.dim())
    throw DimensionMismatchError("put_tensor " + name + ": dim name count mismatch");
  std::vector<int> ids;
  for (int i = 0; i < t.dim(); ++i) {
    int id = dim_id(dim_names[i]);
    if (id < 0)
      id = add_dim(dim_names[i], t.shape(i));
    else if (dims[id].size != t.shape(i))
      throw DimensionMismatchError("put_tensor " + name + ": dimension " + dim_names[i] +
                                   " has size " + std::to_string(dims[id].size) +
                                   ", tensor has " + std::to_string(t.shape(i)));
    ids.push_back(id);
  }
  add_double(name, ids, std::vector<double>(t.data(), t.data() + t.size()));
}

Tensor File::tensor(const std::string& name) const {
  const Variable& v = require(name);
  if (v.type != kDouble)
    throw DimensionMismatchError("variable " + name + " is not double");
  return Tensor::from(var_shape(v), v.dbl);
}

void File::write(const std::string& path) const {
  Writer header;
  header.buf.append("CDF\x01");
  header.i32(0);  // numrecs; all variables here are fixed-size

  if (dims.empty()) {
    header.i32(0);
    header.i32(0);
  } else {
    header.i32(kTagDim);
    header.i32(static_cast<int32_t>(dims.size()));
    for (const auto& d : dims) {
      header.name(d.name);
      header.i32(d.size);
    }
  }
  write_attr_list(header, gattrs);

  // variable section needs data offsets, so size the header first
  size_t hsize = header.buf.size();
  if (vars.empty()) {
    hsize += 8;
  } else {
    hsize += 8;
    for (const auto& v : vars) {
      hsize += 4 + pad4(v.name.size());
      hsize += 4 + 4 * v.dim_ids.size();
      hsize += 8;
      for (const auto& [n, a] : v.attrs) hsize += attr_bytes(n, a);
      hsize += 12;  // nc_type, vsize, begin (CDF-1)
    }
  }

  std::vector<int64_t> begins(vars.size());
  int64_t off = static_cast<int64_t>(hsize);
  for (size_t i = 0; i < vars.size(); ++i) {
    begins[i] = off;
    off += static_cast<int64_t>(pad4(vars[i].count(dims) * type_size(vars[i].type)));
  }
  if (off > 0x7fffffffLL)
    throw DataError("file too large for the classic 32-bit offset format: " + path);

  if (vars.empty()) {
    header.i32(0);
    header.i32(0);
  } else {
    header.i32(kTagVar);
    header.i32(static_cast<int32_t>(vars.size()));
    for (size_t i = 0; i < vars.size(); ++i) {
      const Variable& v = vars[i];
      header.name(v.name);
      header.i32(static_cast<int32_t>(v.dim_ids.size()));
      for (int id : v.dim_ids) header.i32(id);
      write_attr_list(header, v.attrs);
      header.i32(v.type);
      header.i32(static_cast<int32_t>(pad4(v.count(dims) * type_size(v.type))));
      header.i32(static_cast<int32_t>(begins[i]));
    }
  }
  if (header.buf.size() != hsize)
    throw CorruptFileError("internal header sizing error");

  for (const auto& v : vars) {
    switch (v.type) {
      case kDouble:
        for (double d : v.dbl) header.f64(d);
        break;
      case kInt:
        for (int32_t d : v.i32) header.i32(d);
        break;
      case kByte:
        for (int8_t d : v.i8) header.u8(static_cast<uint8_t>(d));
        while (header.buf.size() % 4) header.u8(0);
        break;
      default:
        throw DataError("unsupported variable type on write");
    }
  }

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write(header.buf.data(), static_cast<std::streamsize>(header.buf.size()));
    if (!out) throw DataError("write failed: " + path);
  }
  std::filesystem::rename(tmp, path);
}

File File::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissingError("cannot open file: " + path);
  Reader r;
  r.path = path;
  r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

  if (r.data.size() < 8 || r.data.compare(0, 3, "CDF") != 0 || r.data[3] != 1)
    throw CorruptFileError(path + ": not a classic NetCDF file");
  r.pos = 4;
  r.i32();  // numrecs

  File f;
  int32_t tag = r.i32();
  int32_t n = r.i32();
  if (tag == kTagDim) {
    for (int i = 0; i < n; ++i) {
      std::string nm = r.name();
      int32_t sz = r.i32();
      if (sz < 0) throw CorruptFileError(path + ": record dimensions unsupported");
      f.dims.push_back({nm, sz});
    }
  } else if (!(tag == 0 && n == 0)) {
    throw CorruptFileError(path + ": bad dimension list tag");
  }

  tag = r.i32();
  n = r.i32();
  if (tag == kTagAtt) {
    for (int i = 0; i < n; ++i) {
      std::string nm;
      Attr a = read_attr(r, nm);
      f.gattrs.emplace_back(nm, std::move(a));
    }
  } else if (!(tag == 0 && n == 0)) {
    throw CorruptFileError(path + ": bad global attribute tag");
  }

  tag = r.i32();
  n = r.i32();
  struct Pending {
    size_t var_idx;
    int64_t begin;
  };
  std::vector<Pending> pending;
  if (tag == kTagVar) {
    for (int i = 0; i < n; ++i) {
      Variable v;
      v.name = r.name();
      int32_t nd = r.i32();
      if (nd < 0 || nd > 16) throw CorruptFileError(path + ": bad rank");
      for (int d = 0; d < nd; ++d) {
        int32_t id = r.i32();
        if (id < 0 || id >= static_cast<int32_t>(f.dims.size()))
          throw CorruptFileError(path + ": dimension id out of range");
        v.dim_ids.push_back(id);
      }
      int32_t atag = r.i32();
      int32_t an = r.i32();
      if (atag == kTagAtt) {
        for (int k = 0; k < an; ++k) {
          std::string nm;
          Attr a = read_attr(r, nm);
          v.attrs.emplace_back(nm, std::move(a));
        }
      } else if (!(atag == 0 && an == 0)) {
        throw CorruptFileError(path + ": bad variable attribute tag");
      }
      int32_t t = r.i32();
      r.i32();  // vsize (recomputed)
      int32_t begin = r.i32();
      v.type = static_cast<Type>(t);
      f.vars.push_back(std::move(v));
      pending.push_back({f.vars.size() - 1, begin});
    }
  } else if (!(tag == 0 && n == 0)) {
    throw CorruptFileError(path + ": bad variable list tag");
  }

  for (const auto& p : pending) {
    Variable& v = f.vars[p.var_idx];
    int64_t cnt = v.count(f.dims);
    r.pos = static_cast<size_t>(p.begin);
    switch (v.type) {
      case kDouble:
        v.dbl.resize(cnt);
        for (int64_t i = 0; i < cnt; ++i) v.dbl[i] = r.f64();
        break;
      case kInt:
        v.i32.resize(cnt);
        for (int64_t i = 0; i < cnt; ++i) v.i32[i] = r.i32();
        break;
      case kByte:
        v.i8.resize(cnt);
        r.need(cnt);
        std::memcpy(v.i8.data(), r.data.data() + r.pos, cnt);
        break;
      case kFloat: {
        v.type = kDouble;
        v.dbl.resize(cnt);
        for (int64_t i = 0; i < cnt; ++i) {
          r.need(4);
          uint32_t bits = 0;
          for (int k = 0; k < 4; ++k) bits = (bits << 8) | static_cast<uint8_t>(r.data[r.pos++]);
          float fv;
          std::memcpy(&fv, &bits, 4);
          v.dbl[i] = fv;
        }
        break;
      }
      default:
        throw CorruptFileError(path + ": unsupported variable type " +
                               std::to_string(v.type));
    }
  }
  return f;
}

}  // namespace calmap::nc
