#include "pmltm/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "pmltm/error.hpp"
#include "pmltm/parallel.hpp"

namespace pmltm::text {
namespace {

bool isAsciiSpace(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool isAsciiPunct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// Decodes one UTF-8 sequence starting at s[k]; returns the code point and
// its byte length. Malformed bytes decode as themselves with length 1.
std::pair<char32_t, std::size_t> decode(std::string_view s, std::size_t k) {
    const auto c0 = static_cast<unsigned char>(s[k]);
    auto cont = [&](std::size_t off) {
        return k + off < s.size() && (static_cast<unsigned char>(s[k + off]) & 0xC0) == 0x80;
    };
    auto bits = [&](std::size_t off) { return static_cast<char32_t>(static_cast<unsigned char>(s[k + off]) & 0x3F); };
    if (c0 >= 0xC2 && c0 <= 0xDF && cont(1)) return {(static_cast<char32_t>(c0 & 0x1F) << 6) | bits(1), 2};
    if (c0 >= 0xE0 && c0 <= 0xEF && cont(1) && cont(2))
        return {(static_cast<char32_t>(c0 & 0x0F) << 12) | (bits(1) << 6) | bits(2), 3};
    if (c0 >= 0xF0 && c0 <= 0xF4 && cont(1) && cont(2) && cont(3))
        return {(static_cast<char32_t>(c0 & 0x07) << 18) | (bits(1) << 12) | (bits(2) << 6) | bits(3), 4};
    return {c0, 1};
}

bool isUnicodeSpace(char32_t cp) {
    return cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
           cp == 0x205F || cp == 0x3000 || cp == 0xFEFF;
}

// Latin-1 punctuation and symbols, General Punctuation, CJK punctuation.
bool isUnicodePunct(char32_t cp) {
    return (cp >= 0x00A1 && cp <= 0x00BF && cp != 0x00AA && cp != 0x00B5 && cp != 0x00BA) || cp == 0x00D7 ||
           cp == 0x00F7 || (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
           (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011);
}

// lowercase, drop digits and punctuation, normalise spaces.
std::string normalise(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t k = 0;
    while (k < text.size()) {
        const auto c = static_cast<unsigned char>(text[k]);
        if (c < 0x80) {
            ++k;
            if (c >= '0' && c <= '9') continue;
            if (isAsciiPunct(c)) continue;
            if (isAsciiSpace(c)) {
                out.push_back(' ');
                continue;
            }
            if (c < 0x20 || c == 0x7F) {
                out.push_back(' ');
                continue;
            }
            out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c));
            continue;
        }
        const auto [cp, len] = decode(text, k);
        if (isUnicodeSpace(cp)) out.push_back(' ');
        else if (!isUnicodePunct(cp)) out.append(text.substr(k, len));
        k += len;
    }
    return out;
}

std::size_t minimumDocumentFrequency(double threshold, std::size_t n) {
    const double raw = threshold * static_cast<double>(n);
    // Guard against 0.02 * 100 landing a hair above 2.
    const auto need = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::max<std::size_t>(need, 1);
}

// One CSV record, honouring quoted fields that span lines. Returns false at EOF.
bool readCsvRecord(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    char c = 0;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    if (quoted) throw IngestFailure("CSV corpus: unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
}

std::ofstream openForWrite(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

std::vector<std::string> preprocess(std::string_view document, const PreprocessOptions& options) {
    const std::string clean = normalise(document);
    std::vector<std::string> tokens;
    std::size_t k = 0;
    while (k < clean.size()) {
        while (k < clean.size() && clean[k] == ' ') ++k;
        const auto start = k;
        while (k < clean.size() && clean[k] != ' ') ++k;
        if (k == start) continue;
        std::string token = clean.substr(start, k - start);
        if (options.dropStopWords && isStopWord(token)) continue;
        token = porterStem(token);
        if (token.empty()) continue;
        tokens.push_back(std::move(token));
    }
    return tokens;
}

TermMatrixArtifact buildTermMatrix(const std::vector<Document>& corpus, double threshold, int threads,
                                   const PreprocessOptions& options) {
    if (corpus.empty()) throw IngestFailure("empty corpus: no documents to ingest");
    if (!(threshold >= 0.0 && threshold < 1.0))
        throw InvalidArgument("sparsity threshold must lie in [0, 1), got " + std::to_string(threshold));

    const std::size_t n = corpus.size();
    std::vector<std::vector<std::string>> docTerms(n);
    parallelFor(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto tokens = preprocess(corpus[i].text, options);
            std::sort(tokens.begin(), tokens.end());
            tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
            docTerms[i] = std::move(tokens);
        }
    });

    std::map<std::string, std::size_t> df;
    for (const auto& terms : docTerms)
        for (const auto& t : terms) ++df[t];

    const std::size_t need = minimumDocumentFrequency(threshold, n);
    TermMatrixArtifact artifact;
    artifact.sparsityThreshold = threshold;
    artifact.stopWordHash = options.dropStopWords ? stopWordListHash() : std::string();
    std::map<std::string, std::size_t> column;
    std::size_t maxDf = 0;
    for (const auto& [term, count] : df) {
        maxDf = std::max(maxDf, count);
        if (count >= need) {
            column.emplace(term, artifact.vocabulary.size());
            artifact.vocabulary.push_back(term);
        }
    }
    if (artifact.vocabulary.empty())
        throw IngestFailure("no term survives the sparsity filter: " + std::to_string(n) + " documents, " +
                            std::to_string(df.size()) + " distinct stems, document frequency >= " +
                            std::to_string(need) + " required, highest observed " + std::to_string(maxDf));

    std::vector<std::pair<BinaryMatrix::Index, BinaryMatrix::Index>> entries;
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& t : docTerms[i]) {
            const auto it = column.find(t);
            if (it != column.end()) entries.emplace_back(i, it->second);
        }
    artifact.matrix = BinaryMatrix::fromEntries(n, artifact.vocabulary.size(), std::move(entries));
    artifact.docIds.reserve(n);
    for (const auto& d : corpus) artifact.docIds.push_back(d.id);
    return artifact;
}

std::vector<std::pair<std::string, std::size_t>> termFrequencyReport(const TermMatrixArtifact& artifact) {
    const auto counts = artifact.matrix.columnCounts();
    std::vector<std::pair<std::string, std::size_t>> report;
    report.reserve(counts.size());
    for (std::size_t m = 0; m < counts.size(); ++m) report.emplace_back(artifact.vocabulary.at(m), counts[m]);
    std::sort(report.begin(), report.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return report;
}

std::vector<Document> readLinesCorpus(std::istream& in) {
    std::vector<Document> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        docs.push_back({std::to_string(docs.size() + 1), line});
    }
    return docs;
}

std::vector<Document> readCsvCorpus(std::istream& in) {
    std::vector<std::string> fields;
    if (!readCsvRecord(in, fields)) return {};
    if (fields.size() != 2)
        throw IngestFailure("CSV corpus: expected a two-column header (id, text), got " +
                            std::to_string(fields.size()) + " columns");
    std::vector<Document> docs;
    std::size_t record = 1;
    while (readCsvRecord(in, fields)) {
        ++record;
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 2)
            throw IngestFailure("CSV corpus: record " + std::to_string(record) + " has " +
                                std::to_string(fields.size()) + " fields, expected 2");
        docs.push_back({std::move(fields[0]), std::move(fields[1])});
    }
    return docs;
}

ArtifactPaths artifactPaths(const std::filesystem::path& prefix) {
    const std::string p = prefix.string();
    return {p + ".mtx", p + ".vocab.txt", p + ".freq.csv", p + ".ids.txt", p + ".meta.json"};
}

void writeArtifact(const TermMatrixArtifact& artifact, const ArtifactPaths& paths) {
    writeMatrixMarket(paths.matrix, artifact.matrix);
    {
        auto out = openForWrite(paths.vocabulary);
        for (const auto& t : artifact.vocabulary) out << t << '\n';
    }
    {
        auto out = openForWrite(paths.frequencies);
        out << "term,document_frequency\n";
        for (const auto& [t, c] : termFrequencyReport(artifact)) out << t << ',' << c << '\n';
    }
    {
        auto out = openForWrite(paths.docIds);
        for (const auto& id : artifact.docIds) out << id << '\n';
    }
    if (!paths.metadata.empty()) {
        nlohmann::json meta;
        meta["format"] = "pmltm-term-matrix";
        meta["version"] = 1;
        meta["documents"] = artifact.matrix.rows();
        meta["terms"] = artifact.matrix.cols();
        meta["nonzeros"] = artifact.matrix.nonZeros();
        meta["sparsity_threshold"] = artifact.sparsityThreshold;
        meta["stemmer"] = "porter-1980";
        meta["stop_words"] = artifact.stopWordHash.empty() ? "none" : "smart";
        meta["stop_word_sha256"] = artifact.stopWordHash;
        auto out = openForWrite(paths.metadata);
        out << meta.dump(2) << '\n';
    }
}

}  // namespace pmltm::text
