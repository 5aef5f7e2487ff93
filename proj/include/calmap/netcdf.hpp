#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calmap/errors.hpp"
#include "calmap/tensor.hpp"

namespace calmap::nc {

// NetCDF classic (CDF-1) container, written and parsed directly so that
// identical content produces identical bytes. Readable by the usual
// geoscience tooling (scipy, xarray, ncdump).

enum Type : int32_t {
  kByte = 1,
  kChar = 2,
  kShort = 3,
  kInt = 4,
  kFloat = 5,
  kDouble = 6,
};

struct Attr {
  enum Kind { kStr, kNum, kIntv } kind = kStr;
  std::string s;
  std::vector<double> num;
  std::vector<int32_t> iv;

  static Attr str(std::string v) { return {kStr, std::move(v), {}, {}}; }
  static Attr real(double v) { return {kNum, {}, {v}, {}}; }
  static Attr integer(int32_t v) { return {kIntv, {}, {}, {v}}; }
};

struct Dim {
  std::string name;
  int32_t size = 0;
};

struct Variable {
  std::string name;
  Type type = kDouble;
  std::vector<int> dim_ids;
  std::vector<std::pair<std::string, Attr>> attrs;
  std::vector<double> dbl;   // used when type == kDouble
  std::vector<int32_t> i32;  // used when type == kInt
  std::vector<int8_t> i8;    // used when type == kByte

  int64_t count(const std::vector<Dim>& dims) const {
    int64_t n = 1;
    for (int id : dim_ids) n *= dims[id].size;
    return n;
  }
};

class File {
 public:
  std::vector<Dim> dims;
  std::vector<std::pair<std::string, Attr>> gattrs;
  std::vector<Variable> vars;

  int add_dim(const std::string& name, int size);
  int dim_id(const std::string& name) const;  // -1 if absent

  Variable& add_double(const std::string& name, std::vector<int> dim_ids,
                       std::vector<double> data);
  Variable& add_int(const std::string& name, std::vector<int> dim_ids,
                    std::vector<int32_t> data);
  Variable& add_byte(const std::string& name, std::vector<int> dim_ids,
                     std::vector<int8_t> data);

  void set_gattr(const std::string& name, Attr a) { gattrs.emplace_back(name, std::move(a)); }

  const Variable* find(const std::string& name) const;
  const Variable& require(const std::string& name) const;
  std::vector<int> var_shape(const Variable& v) const;

  std::optional<std::string> gattr_str(const std::string& name) const;
  std::optional<double> gattr_real(const std::string& name) const;

  /// Tensor round-trip helpers (doubles).
  void put_tensor(const std::string& name, const Tensor& t,
                  const std::vector<std::string>& dim_names);
  Tensor tensor(const std::string& name) const;

  void write(const std::string& path) const;
  static File read(const std::string& path);
};

}  // namespace calmap::nc
