#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pakemail/types.hpp"

namespace pakemail {

/// Dictionary of exactly 2^16 distinct words, indexed by 16-bit block value.
class Wordlist {
public:
    static constexpr std::size_t kSize = 65536;

    /// Deterministic pronounceable list: each word spells its index as two
    /// consonant-vowel syllable pairs.
    static const Wordlist& synthetic();

    /// UTF-8 text, one word per line, exactly 65536 non-empty distinct lines.
    /// Throws InvalidArgument describing the first violation.
    static Wordlist load(const std::filesystem::path& path);
    static Wordlist from_words(std::vector<std::string> words);

    const std::string& operator[](std::uint16_t index) const { return words_[index]; }
    std::optional<std::uint16_t> index_of(std::string_view word) const;
    std::size_t size() const { return words_.size(); }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::uint16_t> index_;
};

inline constexpr int kTrustwordsShort = 5;
inline constexpr int kTrustwordsFull = 10;

/// fpr_self XOR fpr_peer, split into ten big-endian 16-bit blocks.
std::array<std::uint16_t, 10> trustword_indices(const Fingerprint& fpr_self, const Fingerprint& fpr_peer);

/// First `count` words (5 or 10) of the XOR rendering; symmetric in the two
/// fingerprints. Throws InvalidArgument for any other count.
std::vector<std::string> trustwords(const Fingerprint& fpr_self, const Fingerprint& fpr_peer,
                                    const Wordlist& wordlist = Wordlist::synthetic(), int count = kTrustwordsShort);

}  // namespace pakemail
