#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forage {

enum class BlockKind { Think, Search, Info, Answer };

const char* to_string(BlockKind kind);
std::optional<BlockKind> block_kind_from_string(std::string_view s);

// One tagged segment of a reasoning trajectory. For Info blocks, `text` holds
// one retrieved passage per line, aligned with `doc_ids`.
struct Block {
  BlockKind kind = BlockKind::Think;
  std::string text;
  std::vector<std::string> doc_ids;

  static Block think(std::string text);
  static Block search(std::string query);
  static Block answer(std::string text);
  static Block info(std::vector<std::string> doc_ids, const std::vector<std::string>& passages);

  std::vector<std::string> passages() const;

  bool operator==(const Block&) const = default;
};

struct Trajectory {
  std::string question;
  std::vector<Block> blocks;

  std::size_t search_count() const;
  const Block* answer_block() const;

  bool operator==(const Trajectory&) const = default;
};

enum class MaskOrigin { ModelGenerated, Injected };

const char* to_string(MaskOrigin origin);

struct MaskSpan {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  MaskOrigin origin = MaskOrigin::ModelGenerated;

  bool operator==(const MaskSpan&) const = default;
};

struct TrajectoryFormat {
  std::string info_tag = "info";
  // Also accept <evidence>...</evidence> as the info tag when parsing.
  bool accept_evidence = false;
};

// Checks the block grammar `(Think? Search Info)* Think? Answer` and the
// per-block text rules. Throws a structural Error naming the first offending
// block index.
void validate_trajectory(const Trajectory& traj, std::optional<std::size_t> max_searches = std::nullopt);

// Blocks are joined by single newlines.
std::string serialize_trajectory(const Trajectory& traj, const TrajectoryFormat& fmt = {});

// Renders blocks as serialize_trajectory does but without the grammar check,
// for the prefix of an episode that has not answered yet.
std::string serialize_partial(const std::vector<Block>& blocks, const TrajectoryFormat& fmt = {});

// Inverse of serialize_trajectory up to whitespace between and inside tags.
// Throws ParseError carrying the character offset of the problem.
Trajectory parse_trajectory(std::string_view text, const TrajectoryFormat& fmt = {});

// Each block owns the newline separator preceding it, so an Info span starts
// at that newline and ends after its closing tag.
std::vector<MaskSpan> compute_loss_mask(const Trajectory& traj, const TrajectoryFormat& fmt = {});

// T = searches + 1; the answer counts as the final step.
std::size_t search_step_count(const Trajectory& traj);

}  // namespace forage
