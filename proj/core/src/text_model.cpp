#include "gary/text_model.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "gary/error.hpp"
#include "utf8.hpp"

namespace gary {

namespace {

enum class VowelKind { None, Weak, Strong };

// i, u and y glide into a neighbouring vowel; a, e, o and any accented vowel
// (grave, acute, circumflex, diaeresis) is a nucleus of its own.
VowelKind vowel_kind(char32_t cp) {
  switch (cp) {
    case U'a': case U'e': case U'o':
    case U'A': case U'E': case U'O':
      return VowelKind::Strong;
    case U'i': case U'u': case U'y':
    case U'I': case U'U': case U'Y':
      return VowelKind::Weak;
    default:
      break;
  }
  // Latin-1 accented vowels, both cases.
  const char32_t lower = (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) ? cp + 0x20 : cp;
  if ((lower >= 0xE0 && lower <= 0xE6) || (lower >= 0xE8 && lower <= 0xEF) ||
      (lower >= 0xF2 && lower <= 0xF6) || (lower >= 0xF9 && lower <= 0xFC) ||
      lower == 0xFD || lower == 0xFF) {
    return VowelKind::Strong;
  }
  return VowelKind::None;
}

bool is_sentence_mark(char c) {
  return c == '.' || c == '?' || c == '!' || c == ';' || c == ':';
}

bool has_sentence_mark(std::string_view s) {
  return std::any_of(s.begin(), s.end(), is_sentence_mark);
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct Chunk {
  std::size_t begin;
  std::size_t end;
};

std::vector<Chunk> split_whitespace(std::string_view text) {
  std::vector<Chunk> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    chunks.push_back({i, j});
    i = j;
  }
  return chunks;
}

}  // namespace

std::size_t code_point_count(std::string_view utf8) {
  return utf8::decode(utf8).size();
}

Document tokenize(std::string_view raw_text, std::string id, std::string title) {
  Document doc;
  doc.id = std::move(id);
  doc.title = std::move(title);
  doc.raw_text = std::string(raw_text);

  std::string pending_prefix;
  bool pending_break = false;
  bool sentence_open = false;
  std::size_t sentence_first = 0;

  const auto close_sentence = [&](std::size_t last_word) {
    doc.sentences.push_back({sentence_first, last_word});
    sentence_open = false;
  };

  for (const Chunk& chunk : split_whitespace(raw_text)) {
    const std::string_view text = raw_text.substr(chunk.begin, chunk.end - chunk.begin);
    const auto cps = utf8::decode(text);

    std::size_t first = cps.size();
    std::size_t last = cps.size();
    for (std::size_t k = 0; k < cps.size(); ++k) {
      if (utf8::is_word_char(cps[k].cp)) {
        if (first == cps.size()) first = k;
        last = k;
      }
    }

    if (first == cps.size()) {
      // Standalone punctuation: attach to the previous word for display and
      // treat as a boundary.
      if (doc.words.empty()) {
        if (!pending_prefix.empty()) pending_prefix += ' ';
        pending_prefix += text;
        pending_break = true;
      } else {
        Word& prev = doc.words.back();
        prev.suffix += ' ';
        prev.suffix += text;
        prev.break_after = true;
        if (sentence_open && has_sentence_mark(text)) close_sentence(doc.words.size() - 1);
      }
      continue;
    }

    const std::size_t tok_begin = cps[first].offset;
    const std::size_t tok_end = cps[last].offset + cps[last].length;

    Word w;
    w.text = std::string(text.substr(tok_begin, tok_end - tok_begin));
    w.span = {chunk.begin + tok_begin, chunk.begin + tok_end};
    w.prefix = pending_prefix + std::string(text.substr(0, tok_begin));
    w.suffix = std::string(text.substr(tok_end));
    w.break_before = pending_break || tok_begin > 0;
    w.break_after = !w.suffix.empty();
    pending_prefix.clear();
    pending_break = false;

    if (!sentence_open) {
      sentence_first = doc.words.size();
      sentence_open = true;
    }
    w.sentence = doc.sentences.size();
    doc.words.push_back(std::move(w));
    if (has_sentence_mark(doc.words.back().suffix)) close_sentence(doc.words.size() - 1);
  }

  if (doc.words.empty()) throw Error(ErrorCode::EmptyText, "text contains no word tokens");
  if (sentence_open) close_sentence(doc.words.size() - 1);
  return doc;
}

int count_syllables(std::string_view word) {
  // Conventional monosyllables the vowel rule would split.
  static const std::array<std::string_view, 2> kMonosyllables{"ciao", "Ciao"};
  if (std::find(kMonosyllables.begin(), kMonosyllables.end(), word) != kMonosyllables.end()) return 1;

  int count = 0;
  int strong = 0;
  bool in_group = false;
  char32_t prev = 0;

  const auto flush = [&] {
    if (in_group) count += std::max(1, strong);
    in_group = false;
    strong = 0;
  };

  for (const auto& c : utf8::decode(word)) {
    VowelKind kind = vowel_kind(c.cp);
    // "qu" + vowel: the u is a glide belonging to the consonant.
    if ((c.cp == U'u' || c.cp == U'U') && (prev == U'q' || prev == U'Q')) kind = VowelKind::None;
    if (kind == VowelKind::None) {
      flush();
    } else {
      in_group = true;
      if (kind == VowelKind::Strong) ++strong;
    }
    prev = c.cp;
  }
  flush();

  if (count == 0) throw Error(ErrorCode::NoVowel, "no vowel in '" + std::string(word) + "'");
  return count;
}

TextCounts count_text(const Document& doc) {
  TextCounts counts;
  counts.words = doc.words.size();
  counts.sentences = doc.sentences.size();
  for (const Word& w : doc.words) {
    for (const auto& c : utf8::decode(w.text)) {
      if (utf8::is_letter(c.cp)) ++counts.letters;
    }
  }
  return counts;
}

double gulpease_raw(const TextCounts& counts) {
  if (counts.words == 0 || counts.sentences == 0) {
    throw Error(ErrorCode::EmptyText, "GULPEASE needs at least one word and one sentence");
  }
  return 89.0 + (300.0 * static_cast<double>(counts.sentences) -
                 10.0 * static_cast<double>(counts.letters)) /
                    static_cast<double>(counts.words);
}

double gulpease(const TextCounts& counts) {
  return std::clamp(gulpease_raw(counts), 0.0, 100.0);
}

double gulpease(const Document& doc) { return gulpease(count_text(doc)); }

SegmentedText segment_phrases(const Document& doc, int max_words) {
  if (max_words < 1 || max_words > kMaxPhraseWords) {
    throw Error(ErrorCode::InvalidArgument, "max_words must be in [1, 5]");
  }
  if (doc.words.empty()) throw Error(ErrorCode::EmptyText, "document has no words");

  SegmentedText seg;
  seg.document = doc;
  seg.word_syllables.reserve(doc.words.size());
  for (const Word& w : doc.words) {
    int syllables = 1;
    try {
      syllables = count_syllables(w.text);
    } catch (const Error&) {
      // Numerals and consonant-only abbreviations still take one beat.
    }
    seg.word_syllables.push_back(syllables);
  }

  const auto emit = [&](std::size_t first, std::size_t last) {
    Phrase p;
    p.index = seg.phrases.size();
    p.words = {first, last};
    for (std::size_t w = first; w <= last; ++w) p.syllable_count += seg.word_syllables[w];
    seg.total_syllables += p.syllable_count;
    seg.phrases.push_back(p);
  };

  const std::size_t n = doc.words.size();
  const auto chunk = static_cast<std::size_t>(max_words);
  std::size_t run_start = 0;
  for (std::size_t w = 0; w < n; ++w) {
    const bool run_ends =
        w + 1 == n || doc.words[w].break_after || doc.words[w + 1].break_before;
    if (!run_ends) continue;
    for (std::size_t first = run_start; first <= w; first += chunk) {
      emit(first, std::min(first + chunk - 1, w));
    }
    run_start = w + 1;
  }

  seg.word_phrase.resize(n);
  for (const Phrase& p : seg.phrases) {
    for (std::size_t w = p.words.first; w <= p.words.last; ++w) seg.word_phrase[w] = p.index;
  }
  seg.gulpease = gulpease(doc);
  return seg;
}

double reading_speed(double total_syllables, double duration_s) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::NonPositiveDuration, "duration must be positive");
  if (!(total_syllables > 0.0)) throw Error(ErrorCode::InvalidArgument, "syllables must be positive");
  return total_syllables / duration_s;
}

void to_json(nlohmann::json& j, const SegmentedText& seg) {
  const Document& doc = seg.document;
  nlohmann::json words = nlohmann::json::array();
  for (std::size_t i = 0; i < doc.words.size(); ++i) {
    const Word& w = doc.words[i];
    words.push_back({{"index", i},
                     {"text", w.text},
                     {"begin", w.span.begin},
                     {"end", w.span.end},
                     {"syllables", seg.word_syllables[i]},
                     {"sentence", w.sentence},
                     {"phrase", seg.word_phrase[i]}});
  }
  nlohmann::json sentences = nlohmann::json::array();
  for (const WordRange& s : doc.sentences) sentences.push_back({s.first, s.last});
  nlohmann::json phrases = nlohmann::json::array();
  for (const Phrase& p : seg.phrases) {
    std::string text;
    for (std::size_t w = p.words.first; w <= p.words.last; ++w) {
      if (!text.empty()) text += ' ';
      text += doc.words[w].text;
    }
    phrases.push_back({{"index", p.index},
                       {"word_span", {p.words.first, p.words.last}},
                       {"syllable_count", p.syllable_count},
                       {"text", text}});
  }
  j = {{"id", doc.id},
       {"title", doc.title},
       {"words", std::move(words)},
       {"sentences", std::move(sentences)},
       {"phrases", std::move(phrases)},
       {"total_syllables", seg.total_syllables},
       {"gulpease", seg.gulpease}};
}

}  // namespace gary
