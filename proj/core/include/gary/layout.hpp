#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gary/geometry.hpp"
#include "gary/text_model.hpp"

namespace gary {

inline constexpr int kMaxLinesPerPage = 7;
inline constexpr double kLineSpacing = 1.5;

/// Fixed-width font metric model. A word is `code points * char_width_px`
/// wide; a line is `line_height_px` tall, i.e. 1.5x the nominal glyph height.
struct Viewport {
  int width_px = 1024;
  int height_px = 768;
  double char_width_px = 12.0;
  double line_height_px = 36.0;
  double margin_px = 48.0;

  double glyph_height_px() const { return line_height_px / kLineSpacing; }
  double line_width_px() const { return width_px - 2.0 * margin_px; }
  int lines_per_page() const;
};

struct WordBox {
  std::size_t word = 0;  // global word index
  Rect box;
};

struct Line {
  std::vector<WordBox> words;
};

struct PageLayout {
  std::size_t page_index = 0;
  double line_height_px = 0.0;
  std::vector<Line> lines;
  WordRange words;    // global word indices shown on the page
  WordRange phrases;  // phrases fully contained in the page

  bool has_word(std::size_t w) const { return words.contains(w); }
  bool has_phrase(std::size_t p) const { return phrases.contains(p); }
  /// Line index and box of a word on this page.
  std::optional<std::pair<std::size_t, Rect>> locate(std::size_t word) const;
};

/// Tracking-error aware area-of-interest settings.
struct AoiConfig {
  double expansion_rms_px = 0.0;
  int lookahead_words = 5;

  /// max(0.5 * line height, 1.5 * calibration RMS)
  double pad(double line_height_px) const;
};

std::vector<PageLayout> paginate(const SegmentedText& seg, const Viewport& vp);

/// Per-line union boxes of the words in `range`, unexpanded.
RectSet word_union_boxes(const PageLayout& page, WordRange range);

RectSet aoi_for_phrase(const PageLayout& page, const Phrase& phrase, const AoiConfig& cfg);

/// Expanded AOI of the words that follow `phrase_index` on the same page, up
/// to `cfg.lookahead_words` of them. Empty for the last phrase of a page.
RectSet lookahead_region(const PageLayout& page, const SegmentedText& seg,
                         std::size_t phrase_index, const AoiConfig& cfg);

/// Index of the page containing a phrase.
std::size_t page_of_phrase(std::span<const PageLayout> pages, std::size_t phrase_index);

void to_json(nlohmann::json& j, const Viewport& vp);
void from_json(const nlohmann::json& j, Viewport& vp);
void to_json(nlohmann::json& j, const Rect& r);
void from_json(const nlohmann::json& j, Rect& r);
void to_json(nlohmann::json& j, const PageLayout& page);
void to_json(nlohmann::json& j, const AoiConfig& cfg);
void from_json(const nlohmann::json& j, AoiConfig& cfg);

}  // namespace gary
