#include "fpst/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fpst {

namespace {
[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& why) {
  throw std::runtime_error("fpst: " + path + ":" + std::to_string(line) + ": " + why);
}
}  // namespace

EdgeListResult load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fpst: cannot open edge list " + path);
  EdgeListResult res;
  std::vector<std::pair<std::size_t, std::size_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t h = line.find_first_not_of(" \t\r");
    if (h == std::string::npos || line[h] == '#') continue;
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u >> v) || u < 0 || v < 0) fail(path, lineno, "expected two nonnegative integer node ids");
    std::string extra;
    if (ls >> extra) fail(path, lineno, "unexpected trailing token '" + extra + "'");
    any = true;
    max_id = std::max({max_id, std::size_t(u), std::size_t(v)});
    if (u == v) {
      ++res.self_loops_dropped;
      continue;
    }
    raw.push_back({std::size_t(u), std::size_t(v)});
  }
  if (!any) throw std::runtime_error("fpst: edge list " + path + " is empty");
  std::size_t before = raw.size();
  res.graph = make_graph(max_id + 1, std::move(raw));
  res.duplicates_dropped = before - res.graph.m();
  return res;
}

Tensor load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fpst: cannot open matrix file " + path);
  std::vector<double> data;
  std::size_t cols = 0, rows = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t c = 0;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace((unsigned char)cell[used])) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        data.push_back(v);
      } catch (const std::exception&) {
        fail(path, lineno, "cannot parse '" + cell + "' as a number");
      }
      ++c;
    }
    if (rows == 0)
      cols = c;
    else if (c != cols)
      fail(path, lineno, "ragged row: expected " + std::to_string(cols) + " columns, got " +
                             std::to_string(c));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("fpst: matrix file " + path + " is empty");
  return Tensor({rows, cols}, std::move(data));
}

LabelsResult load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fpst: cannot open labels file " + path);
  LabelsResult res;
  std::string line;
  std::size_t lineno = 0;
  bool has_split = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t h = line.find_first_not_of(" \t\r");
    if (h == std::string::npos || line[h] == '#') continue;
    std::istringstream ls(line);
    long long y;
    if (!(ls >> y) || y < 0) fail(path, lineno, "expected a nonnegative integer label");
    res.labels.push_back(int(y));
    std::string sp;
    if (ls >> sp) {
      int code = sp == "train" ? 0 : sp == "val" ? 1 : sp == "test" ? 2 : -1;
      if (code < 0) fail(path, lineno, "split must be train|val|test, got '" + sp + "'");
      res.split.push_back(code);
      has_split = true;
    } else {
      res.split.push_back(-1);
    }
  }
  if (res.labels.empty()) throw std::runtime_error("fpst: labels file " + path + " is empty");
  if (!has_split) res.split.clear();
  else
    for (std::size_t i = 0; i < res.split.size(); ++i)
      if (res.split[i] < 0) fail(path, i + 1, "split column present but missing on some rows");
  return res;
}

std::vector<int> synthesize_split(const std::vector<int>& labels, SynthSplit kind,
                                  std::mt19937_64& rng) {
  std::size_t n = labels.size();
  std::vector<int> split(n, 2);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  if (kind == SynthSplit::Citation) {
    int classes = 0;
    for (int y : labels) classes = std::max(classes, y + 1);
    std::vector<std::size_t> taken(std::size_t(classes), 0);
    std::vector<std::size_t> rest;
    for (std::size_t i : idx) {
      if (taken[std::size_t(labels[i])] < 20) {
        split[i] = 0;
        ++taken[std::size_t(labels[i])];
      } else {
        rest.push_back(i);
      }
    }
    std::size_t val_n = std::min<std::size_t>(500, rest.size() / 3);
    for (std::size_t r = 0; r < rest.size(); ++r) split[rest[r]] = r < val_n ? 1 : 2;
  } else {
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double q = double(r) / double(n);
      split[idx[r]] = q < 0.6 ? 0 : (q < 0.8 ? 1 : 2);
    }
  }
  return split;
}

namespace {

constexpr char kMagic[5] = {'F', 'P', 'S', 'T', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("fpst: truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, FpsTModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("fpst: cannot write checkpoint " + path);
  os.write(kMagic, 5);
  const ModelConfig& c = model.config();
  put<std::uint64_t>(os, c.dim);
  put<std::uint64_t>(os, c.heads);
  put<std::uint64_t>(os, c.layers);
  put<std::uint64_t>(os, c.ffn_mult);
  put<std::uint32_t>(os, std::uint32_t(c.act));
  put<std::uint32_t>(os, std::uint32_t(c.mode));
  put<std::uint32_t>(os, c.layernorm ? 1 : 0);
  put<double>(os, c.kappa_init);
  put<double>(os, c.dropout);
  put<std::uint64_t>(os, c.eigvecs);
  put<std::uint64_t>(os, c.hops);
  put<std::uint64_t>(os, c.feat_dim);
  put<std::uint64_t>(os, c.num_classes);
  const auto& ps = model.params().all();
  put<std::uint64_t>(os, ps.size());
  for (const auto& p : ps) {
    put<std::uint32_t>(os, std::uint32_t(p.name.size()));
    os.write(p.name.data(), std::streamsize(p.name.size()));
    const Shape& s = p.value.shape();
    put<std::uint32_t>(os, std::uint32_t(s.size()));
    for (auto e : s) put<std::uint64_t>(os, e);
    os.write(reinterpret_cast<const char*>(p.value.data().data()),
             std::streamsize(p.value.size() * sizeof(double)));
  }
}

FpsTModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("fpst: cannot open checkpoint " + path);
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, kMagic, 5) != 0)
    throw std::runtime_error("fpst: " + path + " is not an FPST1 checkpoint");
  ModelConfig c;
  c.dim = get<std::uint64_t>(is);
  c.heads = get<std::uint64_t>(is);
  c.layers = get<std::uint64_t>(is);
  c.ffn_mult = get<std::uint64_t>(is);
  c.act = Act(get<std::uint32_t>(is));
  c.mode = AttnMode(get<std::uint32_t>(is));
  c.layernorm = get<std::uint32_t>(is) != 0;
  c.kappa_init = get<double>(is);
  c.dropout = get<double>(is);
  c.eigvecs = get<std::uint64_t>(is);
  c.hops = get<std::uint64_t>(is);
  c.feat_dim = get<std::uint64_t>(is);
  c.num_classes = get<std::uint64_t>(is);
  std::mt19937_64 rng(0);
  FpsTModel model = FpsTModel::build(c, rng);
  std::uint64_t count = get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t len = get<std::uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    std::uint32_t nd = get<std::uint32_t>(is);
    Shape s(nd);
    for (auto& e : s) e = get<std::uint64_t>(is);
    Parameter& p = model.params().by_name(name);
    if (p.value.shape() != s)
      throw std::runtime_error("fpst: checkpoint shape mismatch on parameter " + name);
    auto& vals = p.value.node()->values;
    is.read(reinterpret_cast<char*>(vals.data()), std::streamsize(vals.size() * sizeof(double)));
    if (!is) throw std::runtime_error("fpst: truncated checkpoint");
  }
  return model;
}

}  // namespace fpst
