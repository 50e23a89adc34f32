#pragma once

// Small hand-authored PDDL fixtures shared by the unit tests.

namespace fixtures {

inline constexpr const char* kSokobanDomain = R"(
(define (domain sokoban)
  (:requirements :strips :typing :negative-preconditions)
  (:types box)
  (:predicates
    ; box not in a hole yet
    (unstored_box ?box - box)
    (boxes_stuck))
  (:action push_to_hole
    :parameters (?box - box)
    :precondition (unstored_box ?box)
    :effect (and (not (unstored_box ?box)) (not (boxes_stuck)))))
)";

inline constexpr const char* kSokobanProblem = R"(
(define (problem two_boxes)
  (:domain sokoban)
  (:objects b1 b2 - box)
  (:init (unstored_box b1) (unstored_box b2))
  (:goal (and (not (unstored_box b1)) (not (unstored_box b2)))))
)";

inline constexpr const char* kKekeDomain = R"(
(define (domain keke)
  (:requirements :strips :typing :negative-preconditions)
  (:types word)
  (:predicates
    (rule_formed ?word1 - word ?word2 - word ?word3 - word)
    (rule_formable ?word1 - word ?word2 - word ?word3 - word)
    (rule_breakable ?word1 - word ?word2 - word ?word3 - word))
  (:action form_rule
    :parameters (?word1 - word ?word2 - word ?word3 - word)
    :precondition (and (not (rule_formed ?word1 ?word2 ?word3)) (rule_formable ?word1 ?word2 ?word3))
    :effect (rule_formed ?word1 ?word2 ?word3))
  (:action break_rule
    :parameters (?word1 - word ?word2 - word ?word3 - word)
    :precondition (and (rule_formed ?word1 ?word2 ?word3) (rule_breakable ?word1 ?word2 ?word3))
    :effect (not (rule_formed ?word1 ?word2 ?word3))))
)";

inline constexpr const char* kKekeProblem = R"(
(define (problem rock_is_flag)
  (:domain keke)
  (:objects rock is flag - word)
  (:init (rule_formable rock is flag))
  (:goal (rule_formed rock is flag)))
)";

// Two-step chain where the order of the steps matters.
inline constexpr const char* kChainDomain = R"(
(define (domain chain)
  (:requirements :strips :typing)
  (:types node)
  (:predicates (at ?n - node) (link ?a - node ?b - node) (visited ?n - node))
  (:action go
    :parameters (?from - node ?to - node)
    :precondition (and (at ?from) (link ?from ?to))
    :effect (and (at ?to) (not (at ?from)) (visited ?to))))
)";

inline constexpr const char* kChainProblem = R"(
(define (problem line)
  (:domain chain)
  (:objects a b c - node)
  (:init (at a) (link a b) (link b c))
  (:goal (and (at c))))
)";

}  // namespace fixtures
