#include "forage/trajectory.hpp"

#include "forage/error.hpp"
#include "forage/text.hpp"

namespace forage {

namespace {

bool has_angle(std::string_view s) {
  return s.find('<') != std::string_view::npos || s.find('>') != std::string_view::npos;
}

bool valid_doc_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (c == '[' || c == ']' || c == '<' || c == '>' || c == ' ' || c == '\n' || c == '\t' ||
        c == '\r') {
      return false;
    }
  }
  return true;
}

std::string structural(std::size_t index, const std::string& what) {
  return what + " at block " + std::to_string(index);
}

// Returns the grammar violation message for the first offending block, if any.
std::optional<std::pair<std::size_t, std::string>> grammar_violation(const std::vector<Block>& blocks) {
  const std::size_t n = blocks.size();
  std::size_t i = 0;
  while (i < n) {
    const Block& b = blocks[i];
    switch (b.kind) {
      case BlockKind::Think:
        if (i + 1 < n && blocks[i + 1].kind == BlockKind::Think) {
          return std::pair{i + 1, std::string("consecutive Think")};
        }
        if (i + 1 < n && blocks[i + 1].kind == BlockKind::Info) {
          return std::pair{i + 1, std::string("Info without Search")};
        }
        ++i;
        break;
      case BlockKind::Search:
        if (i + 1 >= n || blocks[i + 1].kind != BlockKind::Info) {
          return std::pair{i, std::string("Search without Info")};
        }
        i += 2;
        break;
      case BlockKind::Info:
        return std::pair{i, std::string("Info without Search")};
      case BlockKind::Answer:
        if (i + 1 < n) {
          if (blocks[i + 1].kind == BlockKind::Answer) {
            return std::pair{i + 1, std::string("duplicate Answer")};
          }
          return std::pair{i + 1, std::string("trailing content after Answer")};
        }
        return std::nullopt;
    }
  }
  return std::pair{n, std::string("missing Answer")};
}

std::optional<std::pair<std::size_t, std::string>> text_violation(const std::vector<Block>& blocks) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (has_angle(b.text)) return std::pair{i, std::string("angle bracket in block text")};
    if (b.kind == BlockKind::Info) {
      if (b.doc_ids.empty()) {
        if (!b.text.empty()) return std::pair{i, std::string("Info text without doc ids")};
        continue;
      }
      auto passages = b.passages();
      if (passages.size() != b.doc_ids.size()) {
        return std::pair{i, std::string("Info passages do not match doc ids")};
      }
      for (std::size_t j = 0; j < b.doc_ids.size(); ++j) {
        if (!valid_doc_id(b.doc_ids[j])) return std::pair{i, std::string("invalid doc id")};
        for (std::size_t k = 0; k < j; ++k) {
          if (b.doc_ids[k] == b.doc_ids[j]) return std::pair{i, std::string("duplicate doc id")};
        }
        if (trim(passages[j]) != passages[j]) {
          return std::pair{i, std::string("untrimmed Info passage")};
        }
      }
    } else {
      if (!b.doc_ids.empty()) return std::pair{i, std::string("doc ids outside Info")};
      if (trim(b.text) != b.text) return std::pair{i, std::string("untrimmed block text")};
      if (b.kind == BlockKind::Search && b.text.empty()) {
        return std::pair{i, std::string("empty Search query")};
      }
    }
  }
  return std::nullopt;
}

std::string_view tag_name(BlockKind kind, const TrajectoryFormat& fmt) {
  switch (kind) {
    case BlockKind::Think: return "think";
    case BlockKind::Search: return "search";
    case BlockKind::Info: return fmt.info_tag;
    case BlockKind::Answer: return "answer";
  }
  return "";
}

std::string render_block(const Block& b, const TrajectoryFormat& fmt) {
  std::string tag(tag_name(b.kind, fmt));
  std::string out = "<" + tag + ">";
  if (b.kind == BlockKind::Info) {
    auto passages = b.passages();
    for (std::size_t j = 0; j < b.doc_ids.size(); ++j) {
      if (j) out.push_back('\n');
      out += "[" + b.doc_ids[j] + "]";
      if (!passages[j].empty()) out += " " + passages[j];
    }
  } else {
    out += b.text;
  }
  out += "</" + tag + ">";
  return out;
}

bool is_ws(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

}  // namespace

const char* to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Think: return "think";
    case BlockKind::Search: return "search";
    case BlockKind::Info: return "info";
    case BlockKind::Answer: return "answer";
  }
  return "?";
}

std::optional<BlockKind> block_kind_from_string(std::string_view s) {
  if (s == "think") return BlockKind::Think;
  if (s == "search") return BlockKind::Search;
  if (s == "info") return BlockKind::Info;
  if (s == "answer") return BlockKind::Answer;
  return std::nullopt;
}

const char* to_string(MaskOrigin origin) {
  return origin == MaskOrigin::Injected ? "injected" : "model_generated";
}

Block Block::think(std::string text) { return Block{BlockKind::Think, std::move(text), {}}; }
Block Block::search(std::string query) { return Block{BlockKind::Search, std::move(query), {}}; }
Block Block::answer(std::string text) { return Block{BlockKind::Answer, std::move(text), {}}; }

Block Block::info(std::vector<std::string> doc_ids, const std::vector<std::string>& passages) {
  require(doc_ids.size() == passages.size(), ErrorCode::kInvalidArgument,
          "Info block needs one passage per doc id");
  std::string text;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (i) text.push_back('\n');
    text += passages[i];
  }
  return Block{BlockKind::Info, std::move(text), std::move(doc_ids)};
}

std::vector<std::string> Block::passages() const {
  std::vector<std::string> out;
  if (kind != BlockKind::Info || doc_ids.empty()) return out;
  std::size_t start = 0;
  while (true) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::size_t Trajectory::search_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.kind == BlockKind::Search;
  return n;
}

const Block* Trajectory::answer_block() const {
  for (const auto& b : blocks) {
    if (b.kind == BlockKind::Answer) return &b;
  }
  return nullptr;
}

void validate_trajectory(const Trajectory& traj, std::optional<std::size_t> max_searches) {
  if (auto v = grammar_violation(traj.blocks)) fail(ErrorCode::kStructure, structural(v->first, v->second));
  if (auto v = text_violation(traj.blocks)) fail(ErrorCode::kStructure, structural(v->first, v->second));
  if (max_searches && traj.search_count() > *max_searches) {
    fail(ErrorCode::kStructure, "trajectory has " + std::to_string(traj.search_count()) +
                                    " searches, limit is " + std::to_string(*max_searches));
  }
}

std::string serialize_trajectory(const Trajectory& traj, const TrajectoryFormat& fmt) {
  validate_trajectory(traj);
  std::string out;
  for (std::size_t i = 0; i < traj.blocks.size(); ++i) {
    if (i) out.push_back('\n');
    out += render_block(traj.blocks[i], fmt);
  }
  return out;
}

std::string serialize_partial(const std::vector<Block>& blocks, const TrajectoryFormat& fmt) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out.push_back('\n');
    out += render_block(blocks[i], fmt);
  }
  return out;
}

Trajectory parse_trajectory(std::string_view text, const TrajectoryFormat& fmt) {
  Trajectory traj;
  std::vector<std::size_t> offsets;
  std::size_t pos = 0;
  const std::size_t n = text.size();

  while (true) {
    while (pos < n && is_ws(text[pos])) ++pos;
    if (pos >= n) break;
    if (text[pos] != '<') throw ParseError(pos, "text outside tags");
    const std::size_t open_at = pos;
    const std::size_t close = text.find('>', pos);
    if (close == std::string_view::npos) throw ParseError(pos, "unterminated tag");
    std::string_view name = text.substr(pos + 1, close - pos - 1);
    if (!name.empty() && name[0] == '/') throw ParseError(pos, "unexpected closing tag");

    std::optional<BlockKind> kind;
    if (name == fmt.info_tag || (fmt.accept_evidence && name == "evidence")) {
      kind = BlockKind::Info;
    } else if (name == "think" || name == "search" || name == "answer") {
      kind = block_kind_from_string(name);
    }
    if (!kind) throw ParseError(pos, "unknown tag <" + std::string(name) + ">");

    const std::string closing = "</" + std::string(name) + ">";
    const std::size_t body_start = close + 1;
    const std::size_t end = text.find(closing, body_start);
    const std::size_t next_open = text.find('<', body_start);
    if (end == std::string_view::npos) {
      if (next_open != std::string_view::npos) throw ParseError(next_open, "interleaved tags");
      throw ParseError(open_at, "unclosed tag <" + std::string(name) + ">");
    }
    if (next_open < end) throw ParseError(next_open, "interleaved tags");
    std::string_view body = text.substr(body_start, end - body_start);
    if (body.find('>') != std::string_view::npos) {
      throw ParseError(body_start + body.find('>'), "stray '>' in block");
    }

    Block block;
    block.kind = *kind;
    if (*kind == BlockKind::Info) {
      std::string content = trim(body);
      std::vector<std::string> passages;
      std::size_t line_start = 0;
      while (!content.empty()) {
        std::size_t nl = content.find('\n', line_start);
        std::string line = trim(std::string_view(content).substr(
            line_start, nl == std::string::npos ? std::string::npos : nl - line_start));
        if (line.empty() || line[0] != '[') throw ParseError(body_start, "Info line without [doc_id]");
        std::size_t rb = line.find(']');
        if (rb == std::string::npos || rb == 1) throw ParseError(body_start, "malformed [doc_id]");
        std::string id = line.substr(1, rb - 1);
        if (!valid_doc_id(id)) throw ParseError(body_start, "malformed [doc_id]");
        block.doc_ids.push_back(std::move(id));
        passages.push_back(trim(std::string_view(line).substr(rb + 1)));
        if (nl == std::string::npos) break;
        line_start = nl + 1;
      }
      block = Block::info(std::move(block.doc_ids), passages);
    } else {
      block.text = trim(body);
    }
    traj.blocks.push_back(std::move(block));
    offsets.push_back(open_at);
    pos = end + closing.size();
  }

  auto offset_of = [&](std::size_t index) { return index < offsets.size() ? offsets[index] : n; };
  if (auto v = grammar_violation(traj.blocks)) {
    throw ParseError(offset_of(v->first), structural(v->first, v->second));
  }
  if (auto v = text_violation(traj.blocks)) {
    throw ParseError(offset_of(v->first), structural(v->first, v->second));
  }
  return traj;
}

std::vector<MaskSpan> compute_loss_mask(const Trajectory& traj, const TrajectoryFormat& fmt) {
  validate_trajectory(traj);
  std::vector<MaskSpan> spans;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < traj.blocks.size(); ++i) {
    const std::size_t len = render_block(traj.blocks[i], fmt).size() + (i ? 1 : 0);
    const MaskOrigin origin =
        traj.blocks[i].kind == BlockKind::Info ? MaskOrigin::Injected : MaskOrigin::ModelGenerated;
    if (!spans.empty() && spans.back().origin == origin) {
      spans.back().end += len;
    } else {
      spans.push_back(MaskSpan{pos, pos + len, origin});
    }
    pos += len;
  }
  return spans;
}

std::size_t search_step_count(const Trajectory& traj) { return traj.search_count() + 1; }

}  // namespace forage
