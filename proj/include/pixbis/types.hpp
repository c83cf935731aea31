#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace pixbis {

enum class Label { kBonafide, kAttack };
enum class Split { kTrain, kDev, kEval };
enum class Pai { kNone, kPrintHalftone, kReplayMoire, kReplayBanding, kPrintColorcast };

constexpr std::array<Pai, 4> kAttackPais = {Pai::kPrintHalftone, Pai::kReplayMoire,
                                            Pai::kReplayBanding, Pai::kPrintColorcast};

inline std::string to_string(Label l) { return l == Label::kBonafide ? "bonafide" : "attack"; }

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    default: return "eval";
  }
}

inline std::string to_string(Pai p) {
  switch (p) {
    case Pai::kNone: return "none";
    case Pai::kPrintHalftone: return "print_halftone";
    case Pai::kReplayMoire: return "replay_moire";
    case Pai::kReplayBanding: return "replay_banding";
    default: return "print_colorcast";
  }
}

inline Label label_from_string(const std::string& s) {
  if (s == "bonafide") return Label::kBonafide;
  if (s == "attack") return Label::kAttack;
  throw std::invalid_argument("unknown label '" + s + "'");
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "eval") return Split::kEval;
  throw std::invalid_argument("unknown split '" + s + "'");
}

inline Pai pai_from_string(const std::string& s) {
  if (s == "none") return Pai::kNone;
  if (s == "print_halftone") return Pai::kPrintHalftone;
  if (s == "replay_moire") return Pai::kReplayMoire;
  if (s == "replay_banding") return Pai::kReplayBanding;
  if (s == "print_colorcast") return Pai::kPrintColorcast;
  throw std::invalid_argument("unknown pai '" + s + "'");
}

}  // namespace pixbis
