#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmltm/binary_matrix.hpp"

namespace pmltm::text {

/// Classic Porter (1980) suffix stripper. Expects a lowercase ASCII word;
/// words of length <= 2 are returned unchanged.
std::string porterStem(std::string_view word);

/// Embedded English stop-word list (SMART-derived), sorted.
const std::vector<std::string>& stopWords();
bool isStopWord(std::string_view token);
/// SHA-256 hex digest of the stop-word list joined by '\n'.
std::string stopWordListHash();

struct PreprocessOptions {
    bool dropStopWords = true;
};

/// lowercase -> strip digits -> strip punctuation -> whitespace split ->
/// drop stop words -> stem once -> drop empties.
std::vector<std::string> preprocess(std::string_view document, const PreprocessOptions& options = {});

struct Document {
    std::string id;
    std::string text;
};

struct TermMatrixArtifact {
    std::vector<std::string> vocabulary;
    BinaryMatrix matrix;
    std::vector<std::string> docIds;
    double sparsityThreshold = 0.02;
    std::string stopWordHash;   ///< empty when stop words were kept
};

/// Keeps stems present in at least ceil(threshold * n) documents, sorted
/// lexicographically. Throws IngestFailure on an empty corpus or when no
/// term survives.
TermMatrixArtifact buildTermMatrix(const std::vector<Document>& corpus, double threshold = 0.02,
                                   int threads = 1, const PreprocessOptions& options = {});

/// (term, document frequency), descending; ties in lexicographic order.
std::vector<std::pair<std::string, std::size_t>> termFrequencyReport(const TermMatrixArtifact& artifact);

/// One document per line; ids are 1-based line numbers. Blank lines are kept
/// as empty documents so ids stay aligned with the source.
std::vector<Document> readLinesCorpus(std::istream& in);
/// Two-column CSV (id, text) with a header row; quoted fields supported.
std::vector<Document> readCsvCorpus(std::istream& in);

struct ArtifactPaths {
    std::filesystem::path matrix;
    std::filesystem::path vocabulary;
    std::filesystem::path frequencies;
    std::filesystem::path docIds;
    std::filesystem::path metadata;
};

ArtifactPaths artifactPaths(const std::filesystem::path& prefix);
void writeArtifact(const TermMatrixArtifact& artifact, const ArtifactPaths& paths);

}  // namespace pmltm::text
