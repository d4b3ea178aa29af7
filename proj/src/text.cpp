#include "interleave/conditioning.h"

#include "interleave/error.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <string_view>

namespace interleave {

namespace {

constexpr std::string_view kStopWords[] = {
    "a",     "about", "after", "all",   "also",  "am",    "an",    "and",   "any",   "are",   "as",    "at",
    "be",    "been",  "being", "but",   "by",    "can",   "could", "did",   "do",    "does",  "for",   "from",
    "had",   "has",   "have",  "he",    "her",   "his",   "how",   "i",     "if",    "in",    "into",  "is",
    "it",    "its",   "just",  "me",    "more",  "my",    "no",    "not",   "of",    "on",    "or",    "our",
    "she",   "so",    "some",  "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",
    "this",  "to",    "very",  "was",   "we",    "were",  "what",  "which", "while", "who",   "with",  "you",
};

// Identity rules block the plural rule for words like "bass" or "chorus".
constexpr SuffixRule kLemmaRules[] = {
    {"ss", "ss", 0},  {"us", "us", 0}, {"is", "is", 0}, {"ies", "y", 2},
    {"ing", "", 4},   {"ed", "", 4},   {"s", "", 3},
};

bool ends_with(const std::string & word, std::string_view suffix) {
    return word.size() >= suffix.size() && std::string_view(word).substr(word.size() - suffix.size()) == suffix;
}

std::vector<std::string> split_words(const std::string & text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        words.push_back(std::move(word));
    }
    return words;
}

std::string join(const std::vector<std::string> & parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

} // namespace

void PreprocessConfig::validate() const {
    for (double p : {merge_prob, description_dropout, word_dropout, condition_dropout}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("preprocessing probabilities must lie in [0, 1]");
        }
    }
}

MergeOutcome merge_conditions(const TextAnnotation & ann, const PreprocessConfig & cfg, Rng & rng) {
    cfg.validate();
    MergeOutcome outcome{ann.description, false, false};
    if (ann.tags.empty()) {
        return outcome;
    }
    outcome.merged = rng.bernoulli(cfg.merge_prob);
    if (!outcome.merged) {
        return outcome;
    }
    outcome.description_dropped = rng.bernoulli(cfg.description_dropout);
    std::vector<std::string> parts;
    if (!outcome.description_dropped && !ann.description.empty()) {
        parts.push_back(ann.description);
    }
    for (const auto & [key, value] : ann.tags) { // std::map iterates sorted by key
        parts.push_back(key + ": " + value);
    }
    outcome.text = join(parts, ". ");
    return outcome;
}

std::string word_dropout(const std::string & text, double p, Rng & rng) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("word dropout probability must lie in [0, 1]");
    }
    std::vector<std::string> kept;
    for (auto & word : split_words(text)) {
        if (!rng.bernoulli(p)) {
            kept.push_back(std::move(word));
        }
    }
    return join(kept, " ");
}

std::span<const SuffixRule> lemma_rules() { return kLemmaRules; }

bool is_stop_word(const std::string & word) {
    return std::find(std::begin(kStopWords), std::end(kStopWords), word) != std::end(kStopWords);
}

std::string lemmatize(std::string word) {
    for (;;) {
        const SuffixRule * hit = nullptr;
        for (const auto & rule : kLemmaRules) {
            const std::string_view suffix(rule.suffix);
            if (ends_with(word, suffix) && word.size() >= suffix.size() + rule.min_stem) {
                hit = &rule;
                break;
            }
        }
        if (hit == nullptr) {
            return word;
        }
        std::string next = word.substr(0, word.size() - std::string_view(hit->suffix).size()) + hit->replacement;
        if (next == word) {
            return word;
        }
        word = std::move(next);
    }
}

std::string text_normalize(const std::string & text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        cleaned += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ';
    }
    std::vector<std::string> kept;
    for (auto & word : split_words(cleaned)) {
        if (is_stop_word(word)) {
            continue;
        }
        std::string lemma = lemmatize(std::move(word));
        if (!lemma.empty() && !is_stop_word(lemma)) {
            kept.push_back(std::move(lemma));
        }
    }
    return join(kept, " ");
}

ConditioningTensor encode_text_toy(const std::string & text, int D) {
    if (D < 1) {
        throw ValidationError("text embedding dimension must be >= 1");
    }
    const auto words = split_words(text);
    ConditioningTensor out(static_cast<int>(words.size()), D);
    for (std::size_t i = 0; i < words.size(); ++i) {
        Rng rng(fnv1a64(words[i]));
        auto row = out.rows.row(static_cast<Eigen::Index>(i));
        for (int c = 0; c < D; ++c) {
            row(c) = rng.normal();
        }
        row.normalize();
    }
    return out;
}

} // namespace interleave
