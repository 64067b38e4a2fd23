#include "pakemail/trustwords.hpp"

#include <fstream>

#include "pakemail/errors.hpp"

namespace pakemail {

namespace {

constexpr std::array<std::string_view, 16> kConsonants = {"b", "d", "f", "g", "h", "j", "k", "l",
                                                          "m", "n", "p", "r", "s", "t", "v", "z"};
constexpr std::array<std::string_view, 16> kVowels = {"a",  "e",  "i",  "o",  "u",  "ai", "au", "ea",
                                                      "ee", "ia", "io", "oa", "oo", "ou", "ua", "ue"};

std::string synthetic_word(std::uint16_t index) {
    std::string w;
    for (int shift : {12, 8, 4, 0}) {
        unsigned nibble = (index >> shift) & 0xf;
        w += (shift == 12 || shift == 4) ? kConsonants[nibble] : kVowels[nibble];
    }
    return w;
}

}  // namespace

const Wordlist& Wordlist::synthetic() {
    static const Wordlist list = [] {
        std::vector<std::string> words;
        words.reserve(kSize);
        for (std::size_t i = 0; i < kSize; ++i) words.push_back(synthetic_word(static_cast<std::uint16_t>(i)));
        return from_words(std::move(words));
    }();
    return list;
}

Wordlist Wordlist::from_words(std::vector<std::string> words) {
    if (words.size() != kSize)
        throw InvalidArgument("wordlist must have exactly 65536 entries, got " + std::to_string(words.size()));
    Wordlist list;
    list.index_.reserve(kSize);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (words[i].empty()) throw InvalidArgument("wordlist entry " + std::to_string(i + 1) + " is empty");
        if (!list.index_.emplace(words[i], static_cast<std::uint16_t>(i)).second)
            throw InvalidArgument("wordlist entry " + std::to_string(i + 1) + " duplicates '" + words[i] + "'");
    }
    list.words_ = std::move(words);
    return list;
}

Wordlist Wordlist::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open wordlist " + path.string());
    std::vector<std::string> words;
    words.reserve(kSize);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        words.push_back(std::move(line));
    }
    return from_words(std::move(words));
}

std::optional<std::uint16_t> Wordlist::index_of(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::array<std::uint16_t, 10> trustword_indices(const Fingerprint& fpr_self, const Fingerprint& fpr_peer) {
    std::array<std::uint16_t, 10> blocks{};
    const auto& a = fpr_self.array();
    const auto& b = fpr_peer.array();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto hi = static_cast<std::uint8_t>(a[2 * i] ^ b[2 * i]);
        auto lo = static_cast<std::uint8_t>(a[2 * i + 1] ^ b[2 * i + 1]);
        blocks[i] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return blocks;
}

std::vector<std::string> trustwords(const Fingerprint& fpr_self, const Fingerprint& fpr_peer,
                                    const Wordlist& wordlist, int count) {
    if (count != kTrustwordsShort && count != kTrustwordsFull)
        throw InvalidArgument("trustword count must be 5 or 10");
    auto blocks = trustword_indices(fpr_self, fpr_peer);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(wordlist[blocks[static_cast<std::size_t>(i)]]);
    return out;
}

}  // namespace pakemail
