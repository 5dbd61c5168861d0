#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opctl/cosim.hpp"
#include "opctl/ffn.hpp"
#include "opctl/wcs.hpp"

// Model files: one human-editable text document describing the network, the
// plants, the channel, optional targets and simulation settings.
//
// Grammar (line oriented, '#' starts a comment):
//   [ffn] / [plant 1] / [plant 2] / ... / [channel] / [targets] / [sim]
//   key = value                  keys may carry an index: "a 1", "lambda 2"
// Values:
//   numbers          42, 0.75
//   matrices         [1 0; 0.5 0.3]        rows split by ';'
//   logical          d9[1 7 3 ...]         delta bracket notation
//   index sets       all, {1 2 3}, {1..4 7}
//   Lyapunov recipe  stein(0.7), stein(0.7, identity), stein(0.7, [..])
//   covariance       identity, zero, or a matrix
// The ffn section takes either a direct transition map "f = dN[...]" or
// coefficient tables "a i"/"b i" (one n x w resp. m x w integer matrix per
// state agent) plus "theta". "controls = <state set> : <control set>" lines
// override the admissible controls for the named states; states default to
// every control. Unknown sections or keys are rejected.

namespace opctl {

/// Fully validated model, ready for computation.
struct Model {
    TransitionMatrix trans;
    Constraints cons;
    std::optional<FfnSpec> spec;  ///< set when the coefficient route was used
    bool f_direct = false;

    std::vector<PlantModel> plants;
    CouplingTable coupling;
    bool coupling_from_primitives = false;

    std::optional<std::vector<int>> restricted_target;  ///< desired core states
    SimConfig sim;

    std::string source_path;
    std::uint64_t content_hash = 0;
    std::vector<std::string> notes;  ///< loader decisions worth surfacing
};

Model load_model(const std::string& path);

/// Delta bracket notation round trip.
std::string format_logical(const LogicalMatrix& m);
LogicalMatrix parse_logical(const std::string& text);

/// Transition matrix text file (dims line plus delta notation).
void write_transition(const std::string& path, const TransitionMatrix& trans);
TransitionMatrix read_transition(const std::string& path);

/// Success probability rows as CSV (z, one column per plant); exact double
/// round trip.
void write_lambda_csv(const std::string& path, const CouplingTable& coupling);
Eigen::MatrixXd read_lambda_csv(const std::string& path);

/// FNV-1a over a byte string; used for provenance hashes in reports.
std::uint64_t content_hash(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

/// Shared index-set syntax: "all", "{1 2}", "{1..4 7}", or a bare
/// comma/space separated list. `universe` resolves "all".
std::vector<int> parse_index_set(const std::string& text, int universe, const std::string& what);

} // namespace opctl
