#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gary {

/// Half-open byte range into Document::raw_text.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Word {
  std::string text;     // the word token, punctuation stripped (elisions kept)
  ByteSpan span;        // location of `text` inside the raw text
  std::string prefix;   // punctuation displayed before the token
  std::string suffix;   // punctuation displayed after the token
  bool break_before = false;
  bool break_after = false;
  std::size_t sentence = 0;
};

/// Inclusive word index range.
struct WordRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t w) const { return w >= first && w <= last; }
  friend bool operator==(const WordRange&, const WordRange&) = default;
};

struct Document {
  std::string id;
  std::string title;
  std::string raw_text;
  std::vector<Word> words;
  std::vector<WordRange> sentences;
};

struct Phrase {
  std::size_t index = 0;
  WordRange words;
  int syllable_count = 0;
};

struct SegmentedText {
  Document document;
  std::vector<Phrase> phrases;
  std::vector<int> word_syllables;
  std::vector<std::size_t> word_phrase;  // phrase index of every word
  int total_syllables = 0;
  double gulpease = 0.0;
};

/// Counts that GULPEASE is computed from.
struct TextCounts {
  std::size_t words = 0;
  std::size_t letters = 0;
  std::size_t sentences = 0;
};

inline constexpr int kMaxPhraseWords = 5;

/// Splits on whitespace; leading/trailing punctuation is peeled off each token
/// and recorded as a phrase boundary. Sentences end at . ? ! ; : when the mark is
/// followed by whitespace or the end of the text.
Document tokenize(std::string_view raw_text, std::string id = {}, std::string title = {});

/// Italian syllable count by vowel-nucleus counting. Throws NoVowel when the
/// token has no vowel.
int count_syllables(std::string_view word);

TextCounts count_text(const Document& doc);

/// 89 + (300 * sentences - 10 * letters) / words, without clamping.
double gulpease_raw(const TextCounts& counts);
/// GULPEASE clamped to [0, 100].
double gulpease(const TextCounts& counts);
double gulpease(const Document& doc);

/// Breaks at every punctuation boundary, then chunks each punctuation-free run
/// greedily into groups of `max_words`.
SegmentedText segment_phrases(const Document& doc, int max_words = kMaxPhraseWords);

/// Syllables per second.
double reading_speed(double total_syllables, double duration_s);

/// Number of Unicode code points in a UTF-8 string.
std::size_t code_point_count(std::string_view utf8);

void to_json(nlohmann::json& j, const SegmentedText& seg);

}  // namespace gary
