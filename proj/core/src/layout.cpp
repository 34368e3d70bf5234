#include "gary/layout.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gary/error.hpp"

namespace gary {

int Viewport::lines_per_page() const {
  const double usable = height_px - 2.0 * margin_px;
  const int fit = static_cast<int>(std::floor(usable / line_height_px));
  return std::clamp(fit, 1, kMaxLinesPerPage);
}

double AoiConfig::pad(double line_height_px) const {
  return std::max(0.5 * line_height_px, 1.5 * expansion_rms_px);
}

std::optional<std::pair<std::size_t, Rect>> PageLayout::locate(std::size_t word) const {
  if (!has_word(word)) return std::nullopt;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& ws = lines[li].words;
    if (ws.empty() || word < ws.front().word || word > ws.back().word) continue;
    return std::make_pair(li, ws[word - ws.front().word].box);
  }
  return std::nullopt;
}

namespace {

struct Placement {
  std::size_t line;
  double x;
};

// Advance widths in character cells.
struct WordMetrics {
  double prefix;
  double token;
  double suffix;
  double total() const { return prefix + token + suffix; }
};

WordMetrics measure(const Word& w) {
  return {static_cast<double>(code_point_count(w.prefix)),
          static_cast<double>(code_point_count(w.text)),
          static_cast<double>(code_point_count(w.suffix))};
}

}  // namespace

std::vector<PageLayout> paginate(const SegmentedText& seg, const Viewport& vp) {
  const auto& words = seg.document.words;
  const double cw = vp.char_width_px;
  const double line_w = vp.line_width_px();
  const auto max_lines = static_cast<std::size_t>(vp.lines_per_page());

  std::vector<WordMetrics> metrics;
  metrics.reserve(words.size());
  for (const Word& w : words) {
    metrics.push_back(measure(w));
    if (metrics.back().total() * cw > line_w) {
      throw Error(ErrorCode::WordTooWide, "word '" + w.text + "' is wider than a line");
    }
  }

  std::vector<PageLayout> pages;
  PageLayout page;
  std::size_t line = 0;
  double x = 0.0;  // advance within current line, px
  bool line_empty = true;

  const auto start_page = [&](std::size_t first_word, std::size_t first_phrase) {
    page = PageLayout{};
    page.page_index = pages.size();
    page.line_height_px = vp.line_height_px;
    page.words = {first_word, first_word};
    page.phrases = {first_phrase, first_phrase};
    page.lines.emplace_back();
    line = 0;
    x = 0.0;
    line_empty = true;
  };

  // Simulates placing a phrase starting at the current cursor; returns the
  // placements or nullopt if it would overflow the page.
  const auto try_place = [&](const Phrase& p) -> std::optional<std::vector<Placement>> {
    std::vector<Placement> out;
    std::size_t l = line;
    double cx = x;
    bool empty = line_empty;
    for (std::size_t w = p.words.first; w <= p.words.last; ++w) {
      const double adv = metrics[w].total() * cw;
      const double start = empty ? 0.0 : cx + cw;
      if (start + adv > line_w) {
        ++l;
        if (l >= max_lines) return std::nullopt;
        out.push_back({l, 0.0});
        cx = adv;
      } else {
        out.push_back({l, start});
        cx = start + adv;
      }
      empty = false;
    }
    return out;
  };

  const double glyph_h = vp.glyph_height_px();
  start_page(0, 0);
  for (const Phrase& p : seg.phrases) {
    auto placed = try_place(p);
    if (!placed) {
      pages.push_back(std::move(page));
      start_page(p.words.first, p.index);
      placed = try_place(p);
      if (!placed) {
        throw Error(ErrorCode::WordTooWide, "phrase " + std::to_string(p.index) + " does not fit a page");
      }
    }
    for (std::size_t k = 0; k < placed->size(); ++k) {
      const std::size_t w = p.words.first + k;
      const Placement& pl = (*placed)[k];
      while (page.lines.size() <= pl.line) page.lines.emplace_back();
      const double left = vp.margin_px + pl.x + metrics[w].prefix * cw;
      const double top = vp.margin_px + static_cast<double>(pl.line) * vp.line_height_px +
                         (vp.line_height_px - glyph_h) / 2.0;
      page.lines[pl.line].words.push_back({w, Rect{left, top, metrics[w].token * cw, glyph_h}});
      line = pl.line;
      x = pl.x + metrics[w].total() * cw;
      line_empty = false;
    }
    page.words.last = p.words.last;
    page.phrases.last = p.index;
  }
  pages.push_back(std::move(page));
  return pages;
}

RectSet word_union_boxes(const PageLayout& page, WordRange range) {
  RectSet out;
  std::optional<std::size_t> current_line;
  for (std::size_t w = range.first; w <= range.last; ++w) {
    const auto loc = page.locate(w);
    if (!loc) throw Error(ErrorCode::PhraseNotOnPage, "word " + std::to_string(w) + " is not on page");
    if (current_line && *current_line == loc->first) {
      out.back() = out.back().united(loc->second);
    } else {
      out.push_back(loc->second);
      current_line = loc->first;
    }
  }
  return out;
}

namespace {

RectSet expand_all(RectSet rects, double pad) {
  for (Rect& r : rects) r = r.expanded(pad);
  return rects;
}

}  // namespace

RectSet aoi_for_phrase(const PageLayout& page, const Phrase& phrase, const AoiConfig& cfg) {
  if (!page.has_phrase(phrase.index)) {
    throw Error(ErrorCode::PhraseNotOnPage,
                "phrase " + std::to_string(phrase.index) + " is not on page " +
                    std::to_string(page.page_index));
  }
  return expand_all(word_union_boxes(page, phrase.words), cfg.pad(page.line_height_px));
}

RectSet lookahead_region(const PageLayout& page, const SegmentedText& seg,
                         std::size_t phrase_index, const AoiConfig& cfg) {
  if (!page.has_phrase(phrase_index) || phrase_index >= seg.phrases.size()) {
    throw Error(ErrorCode::PhraseNotOnPage,
                "phrase " + std::to_string(phrase_index) + " is not on page " +
                    std::to_string(page.page_index));
  }
  const std::size_t after = seg.phrases[phrase_index].words.last + 1;
  if (after > page.words.last || cfg.lookahead_words <= 0) return {};
  const std::size_t last =
      std::min(page.words.last, after + static_cast<std::size_t>(cfg.lookahead_words) - 1);
  return expand_all(word_union_boxes(page, {after, last}), cfg.pad(page.line_height_px));
}

std::size_t page_of_phrase(std::span<const PageLayout> pages, std::size_t phrase_index) {
  const auto it = std::find_if(pages.begin(), pages.end(),
                               [&](const PageLayout& p) { return p.has_phrase(phrase_index); });
  if (it == pages.end()) {
    throw Error(ErrorCode::PhraseNotOnPage, "phrase " + std::to_string(phrase_index) + " is on no page");
  }
  return static_cast<std::size_t>(it - pages.begin());
}

void to_json(nlohmann::json& j, const Viewport& vp) {
  j = {{"width_px", vp.width_px},
       {"height_px", vp.height_px},
       {"char_width_px", vp.char_width_px},
       {"line_height_px", vp.line_height_px},
       {"margin_px", vp.margin_px}};
}

void from_json(const nlohmann::json& j, Viewport& vp) {
  vp = Viewport{};
  vp.width_px = j.value("width_px", vp.width_px);
  vp.height_px = j.value("height_px", vp.height_px);
  vp.char_width_px = j.value("char_width_px", vp.char_width_px);
  vp.line_height_px = j.value("line_height_px", vp.line_height_px);
  vp.margin_px = j.value("margin_px", vp.margin_px);
  if (vp.width_px <= 0 || vp.height_px <= 0 || !(vp.char_width_px > 0) || !(vp.line_height_px > 0)) {
    throw Error(ErrorCode::InvalidArgument, "viewport dimensions must be positive");
  }
}

void to_json(nlohmann::json& j, const Rect& r) { j = {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

void from_json(const nlohmann::json& j, Rect& r) {
  r = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

void to_json(nlohmann::json& j, const PageLayout& page) {
  nlohmann::json lines = nlohmann::json::array();
  for (const Line& line : page.lines) {
    nlohmann::json ws = nlohmann::json::array();
    for (const WordBox& wb : line.words) {
      ws.push_back({{"word", wb.word}, {"x", wb.box.x}, {"y", wb.box.y}, {"w", wb.box.w}, {"h", wb.box.h}});
    }
    lines.push_back({{"words", std::move(ws)}});
  }
  j = {{"page_index", page.page_index},
       {"line_height_px", page.line_height_px},
       {"word_span", {page.words.first, page.words.last}},
       {"phrase_span", {page.phrases.first, page.phrases.last}},
       {"lines", std::move(lines)}};
}

void to_json(nlohmann::json& j, const AoiConfig& cfg) {
  j = {{"expansion_rms_px", cfg.expansion_rms_px}, {"lookahead_words", cfg.lookahead_words}};
}

void from_json(const nlohmann::json& j, AoiConfig& cfg) {
  cfg = AoiConfig{};
  cfg.expansion_rms_px = j.value("expansion_rms_px", cfg.expansion_rms_px);
  cfg.lookahead_words = j.value("lookahead_words", cfg.lookahead_words);
  if (cfg.expansion_rms_px < 0 || cfg.lookahead_words < 1) {
    throw Error(ErrorCode::InvalidArgument, "invalid AOI configuration");
  }
}

}  // namespace gary
