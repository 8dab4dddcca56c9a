#pragma once

#include <string>

#include "fpst/graph.hpp"
#include "fpst/model.hpp"

namespace fpst {

struct EdgeListResult {
  Graph graph;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

// one "u v" pair per line; '#' lines ignored; node count = max id + 1
EdgeListResult load_edge_list(const std::string& path);

// comma-separated floats, one row per line
Tensor load_csv_matrix(const std::string& path);

enum class SynthSplit { None, Citation, Balanced622 };

struct LabelsResult {
  std::vector<int> labels;
  std::vector<int> split;  // empty when the file has no split column
};
// one integer per line, optional second column in {train,val,test}
LabelsResult load_labels(const std::string& path);

// deterministic split synthesis; Citation: 20 train nodes per class,
// 500 val / 1000 test sampled from the rest (capped for small graphs);
// Balanced622: 60/20/20
std::vector<int> synthesize_split(const std::vector<int>& labels, SynthSplit kind,
                                  std::mt19937_64& rng);

// versioned binary checkpoint: magic "FPST1", config, named parameter
// records
void save_checkpoint(const std::string& path, FpsTModel& model);
FpsTModel load_checkpoint(const std::string& path);

}  // namespace fpst
