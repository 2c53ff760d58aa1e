#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "imagedpo/corrupt.hpp"
#include "imagedpo/image.hpp"
#include "imagedpo/objectives.hpp"
#include "imagedpo/policy.hpp"

namespace imagedpo {

enum class ShapeKind { disc, square, triangle, ring };

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& s);

struct ShapeSpec {
  ShapeKind kind = ShapeKind::disc;
  int cx = 0;
  int cy = 0;
  int size = 3;  // radius / half-extent
  double intensity = 0.5;
};

struct Scene {
  int width = 32;
  int height = 32;
  double background = 0.1;
  int template_id = 0;
  std::vector<ShapeSpec> shapes;
};

/// Analytic pixel-count proxy used for all "largest" ground truths.
double shape_area(const ShapeSpec& shape);

/// Answer token derived purely from the scene parameters.
int derive_answer(const Scene& scene);

ImageGrid render_scene(const Scene& scene);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

struct QIATriplet {
  std::string id;
  TokenSeq q;
  std::string image_ref;  // relative to the dataset directory
  int answer = 0;
  Scene scene;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  int n_scenes = 100;
  int image_size = 32;
  int expand = 0;  // extra triplets derived via the tool pipeline, per scene
};

/// Renders n_scenes procedural scenes (plus optional tool-derived expansions),
/// writes PGMs under out_dir/images/, and returns the records. Fully
/// deterministic per seed.
std::vector<QIATriplet> synth_world(const WorldConfig& config,
                                    const std::filesystem::path& out_dir);

// --- self-guided tool pipeline -------------------------------------------

struct GenerateInstr {
  std::uint64_t scene_seed = 0;
};

enum class EditOp { identity, invert, flip };

struct EditInstr {
  EditOp op = EditOp::identity;
};

struct SwapInstr {
  int target = 0;  // shape index to replace
  ShapeKind new_kind = ShapeKind::disc;
};

struct ToolChoice {
  enum class Kind { generate, edit, object_swap };
  std::variant<GenerateInstr, EditInstr, SwapInstr> instruction;
  Kind kind() const { return static_cast<Kind>(instruction.index()); }
};

/// Seeded choice of tool + instruction. object_swap always names a target
/// shape and a replacement kind different from it.
ToolChoice propose_tool(const QIATriplet& triplet, std::uint64_t seed);

/// Renders the new image per the instruction, writes it under
/// out_dir/images/, and re-derives the QA from the new scene's ground truth.
QIATriplet apply_tool(const QIATriplet& triplet, const ToolChoice& choice,
                      const std::filesystem::path& out_dir, const std::string& new_id);

// --- preference pair construction -----------------------------------------

struct PreferencePairRecord {
  std::string pair_id;
  TokenSeq q;
  int answer = 0;
  std::string good_image_ref;
  std::string bad_image_ref;
  CorruptionSpec corruption;  // replayable; semantic records carry area_fraction
  std::string source_triplet_id;
};

/// One record per (triplet, spec). Semantic specs target a seeded shape's
/// bounding box; records with area_fraction <= 0.10 are dropped. Resize specs
/// are rejected: not a training corruption.
std::vector<PreferencePairRecord> build_image_pairs(const std::vector<QIATriplet>& triplets,
                                                    const std::vector<CorruptionSpec>& specs,
                                                    std::uint64_t seed,
                                                    const std::filesystem::path& dataset_dir);

enum class NegativeMode { random, hard };

std::string to_string(NegativeMode mode);
NegativeMode negative_mode_from_string(const std::string& s);

struct TextPairRecord {
  std::string pair_id;
  TokenSeq q;
  std::string image_ref;
  int a_good = 0;
  int a_bad = 0;
  NegativeMode mode = NegativeMode::random;
  bool corrupted = false;
  CorruptionSpec corruption;  // valid when corrupted
  std::string source_triplet_id;
};

/// a_good is the ground truth; a_bad is a seeded wrong answer, or the
/// reference policy's top wrong answer in hard mode (ref required then).
std::vector<TextPairRecord> build_text_pairs(const std::vector<QIATriplet>& triplets,
                                             std::uint64_t seed, NegativeMode mode,
                                             const PolicyParams* ref,
                                             const std::filesystem::path& dataset_dir);

/// Same, but the shared image is first corrupted per spec (one record per
/// triplet x spec, semantic <=10% records dropped as in build_image_pairs).
std::vector<TextPairRecord> build_text_pairs_on_corrupted(
    const std::vector<QIATriplet>& triplets, const std::vector<CorruptionSpec>& specs,
    std::uint64_t seed, NegativeMode mode, const PolicyParams* ref,
    const std::filesystem::path& dataset_dir);

// --- JSONL formats ----------------------------------------------------------

void write_triplets_jsonl(const std::vector<QIATriplet>& triplets,
                          const std::filesystem::path& file);
std::vector<QIATriplet> read_triplets_jsonl(const std::filesystem::path& file);

void write_image_pairs_jsonl(const std::vector<PreferencePairRecord>& records,
                             const std::filesystem::path& file);
std::vector<PreferencePairRecord> read_image_pairs_jsonl(const std::filesystem::path& file);

void write_text_pairs_jsonl(const std::vector<TextPairRecord>& records,
                            const std::filesystem::path& file);
std::vector<TextPairRecord> read_text_pairs_jsonl(const std::filesystem::path& file);

// --- loading into training batches ------------------------------------------

ImagePrefBatch load_image_batch(const std::vector<PreferencePairRecord>& records,
                                const std::filesystem::path& dataset_dir);
TextPrefBatch load_text_batch(const std::vector<TextPairRecord>& records,
                              const std::filesystem::path& dataset_dir);
LabeledBatch load_labeled_batch(const std::vector<QIATriplet>& triplets,
                                const std::filesystem::path& dataset_dir);

}  // namespace imagedpo
