#pragma once

// JSON templates and reports, CSV datasets, synthetic data and the weight
// sidecar format.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ose/abnc.hpp"
#include "ose/arch.hpp"
#include "ose/extractor.hpp"
#include "ose/metrics.hpp"
#include "ose/network.hpp"
#include "ose/oracle.hpp"

namespace ose {

using Json = nlohmann::ordered_json;

struct TemplateDoc {
  ArchTemplate arch;
  std::vector<ArchParamVar> variables;
};

// Schema:
//   { "input_dim": 16,
//     "variables": [{"name": "H", "role": "dimension", "domain": [2, 4, 8]}, ...],
//     "constraints": [{"kind": "divides", "lhs": "A", "rhs": "H"}, ...],
//     "depth_variable": "n",                        (optional)
//     "layers": [{"kind": "dense", "in": "p", "out": "H", "bias": true,
//                 "segment": "A"}, ...] }
// Dimension fields accept integers or polynomial strings.
TemplateDoc parse_template(const Json& doc);
TemplateDoc load_template(const std::filesystem::path& path);

// The search space of a template document: its domains filtered by its
// constraints.
SearchSpace template_space(const TemplateDoc& doc,
                           std::size_t cap = kDefaultEnumerationCap);

// CSV: feature columns then a 0/1 label; a non-numeric first row is a header.
Dataset parse_dataset_csv(const std::string& text);
Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& data);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

enum class DataKind { kBlobs, kXor, kLinear };
DataKind data_kind_from_name(const std::string& name);

// blobs: Gaussian clusters around -1 and +1 in every coordinate.
// xor: parity of the signs of the first two coordinates.
// linear: labels from a random hyperplane through the origin.
// Features get Gaussian noise of standard deviation `noise`.
Dataset gen_data(DataKind kind, std::size_t n, std::size_t p, double noise,
                 std::uint64_t seed);

std::string format_double(double v);
std::string format_rational(const Rational& r);

Json to_json(const ParamAssignment& a);
Json to_json(const MetricsReport& m);
Json to_json(const CandidateRecord& r);
Json to_json(const WeakResult& w);
Json to_json(const AbncReport& r);
Json to_json(const OrderingResult& r);
Json to_json(const DecResult& r);
Json to_json(const ShortestPathResult& r);

// Report body of an extraction without the runtime section.
Json extraction_report(const ExtractionResult& result, const Json& config_echo);

// FNV-1a of the compact serialization.
std::uint64_t config_hash(const Json& config);

// Writes every parameter tensor as little-endian float64, row-major, in layer
// and tensor order, plus a JSON manifest of the shapes.
void write_weight_sidecar(const Network& net, const std::filesystem::path& bin_path,
                          const std::filesystem::path& manifest_path);
// Reads a sidecar back into a network of matching layout.
void read_weight_sidecar(Network& net, const std::filesystem::path& bin_path,
                         const std::filesystem::path& manifest_path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ose
