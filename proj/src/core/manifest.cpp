#include "uwfqa/manifest.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "uwfqa/digest.hpp"
#include "uwfqa/errors.hpp"

namespace uwfqa {
namespace {

constexpr std::size_t kColumns = 3 + kNumArtifacts;

// RFC 4180 field splitting; quotes only where a field needs them.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row);
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
    case Split::kUnassigned:
      break;
  }
  return "";
}

std::optional<Split> split_from_string(std::string_view text) {
  if (text.empty()) return Split::kUnassigned;
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  return std::nullopt;
}

ClassCounts count_positives(const std::vector<ImageRecord>& records) {
  ClassCounts counts{};
  for (const auto& r : records) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) counts[c] += r.labels.test(c) ? 1 : 0;
  }
  return counts;
}

DatasetManifest::DatasetManifest(std::vector<ImageRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& id = records_[i].id;
    if (id.empty()) throw ValidationError("record " + std::to_string(i) + " has an empty id");
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
  }
  counts_ = count_positives(records_);
}

std::filesystem::path DatasetManifest::resolve(const ImageRecord& record) const {
  if (record.image_path.is_absolute() || base_dir_.empty()) return record.image_path;
  return base_dir_ / record.image_path;
}

std::vector<ImageRecord> DatasetManifest::subset(Split split) const {
  std::vector<ImageRecord> out;
  for (const auto& r : records_) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::size_t DatasetManifest::count(Split split) const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.split == split ? 1 : 0;
  return n;
}

std::string DatasetManifest::digest() const { return sha256_hex(render_manifest(*this)); }

DatasetManifest parse_manifest(std::istream& in, std::filesystem::path base_dir) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw ParseError("missing header", row);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  if (line != kManifestHeader) {
    throw ParseError("unexpected header '" + line + "'", row);
  }

  std::vector<ImageRecord> records;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line, row);
    if (fields.size() != kColumns) {
      throw ParseError("expected " + std::to_string(kColumns) + " columns, got " +
                           std::to_string(fields.size()),
                       row);
    }
    ImageRecord rec;
    rec.id = fields[0];
    if (rec.id.empty()) throw ParseError("empty id", row);
    if (!seen.insert(rec.id).second) {
      throw ValidationError("row " + std::to_string(row) + ": duplicate id '" + rec.id + "'");
    }
    rec.image_path = fields[1];
    std::array<int, kNumArtifacts> bits{};
    for (std::size_t c = 0; c < kNumArtifacts; ++c) {
      const auto& cell = fields[2 + c];
      if (cell == "0") {
        bits[c] = 0;
      } else if (cell == "1") {
        bits[c] = 1;
      } else {
        throw ValidationError("row " + std::to_string(row) + ": label " +
                              std::string(kArtifactNames[c]) + " must be 0 or 1, got '" + cell +
                              "'");
      }
    }
    rec.labels = ArtifactLabelVector::from_bits(bits);
    auto split = split_from_string(fields[kColumns - 1]);
    if (!split) throw ParseError("unknown split '" + fields[kColumns - 1] + "'", row);
    rec.split = *split;
    records.push_back(std::move(rec));
  }
  return DatasetManifest(std::move(records), std::move(base_dir));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  out << kManifestHeader << '\n';
  for (const auto& r : manifest.records()) {
    out << quote_if_needed(r.id) << ',' << quote_if_needed(r.image_path.generic_string());
    for (int b : r.labels.to_bits()) out << ',' << b;
    out << ',' << to_string(r.split) << '\n';
  }
}

std::string render_manifest(const DatasetManifest& manifest) {
  std::ostringstream os;
  write_manifest(os, manifest);
  return os.str();
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(out, manifest);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

}  // namespace uwfqa
