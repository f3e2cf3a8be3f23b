#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmltm/model.hpp"

namespace pmltm {

inline constexpr const char* kModelFormat = "pmltm-model";
inline constexpr int kModelFormatVersion = 1;

/// Shortest round-trip decimal representation.
std::string formatDouble(double value);

/// Versioned JSON document: eta, alpha, W, lambda, hyperparameters, seed,
/// trace summary, scores, standardized loadings and median probabilities.
std::string modelJson(const FitResult& fit, const Hyperparameters& hyper);
void writeModelJson(const std::filesystem::path& path, const FitResult& fit,
                    const Hyperparameters& hyper);

struct LoadedModel {
    ModelParameters params;
    Hyperparameters hyper;
    int version = 0;
    bool converged = false;
    int iterations = 0;
};
LoadedModel readModelJson(const std::filesystem::path& path);
LoadedModel parseModelJson(const std::string& text);

/// iteration,bound,aitken
void writeTraceCsv(std::ostream& out, const FitResult& fit);
void writeTraceCsv(const std::filesystem::path& path, const FitResult& fit);

/// id,label,max_responsibility; ids default to 1-based row numbers.
void writeAssignmentsCsv(std::ostream& out, const FitResult& fit,
                         const std::vector<std::string>& ids = {});
void writeAssignmentsCsv(const std::filesystem::path& path, const FitResult& fit,
                         const std::vector<std::string>& ids = {});

/// One label per line, or a CSV whose header has a `label` column.
std::vector<std::string> readLabels(const std::filesystem::path& path);
void writeLabels(const std::filesystem::path& path, const std::vector<int>& labels);

}  // namespace pmltm
