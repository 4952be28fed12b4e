#pragma once

// Built-in domains for the six task families and their object vocabularies.

#include <string_view>

#include "planforge/pddl.hpp"

namespace planforge::domains {

inline constexpr std::string_view kBlocksWorld = R"((define (domain blocksworld)
  (:requirements :strips)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (handempty) (holding ?x))
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down
    :parameters (?x)
    :precondition (and (holding ?x))
    :effect (and (ontable ?x) (clear ?x) (handempty) (not (holding ?x))))
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty)))))
)";

// Blocks carry an orientation. Keyed blocks only accept an oriented block on
// top (stack-aligned); plain blocks accept anything (stack).
inline constexpr std::string_view kBlocksWorldAlign = R"((define (domain blocksworld-align)
  (:requirements :strips)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (handempty) (holding ?x)
               (oriented ?x) (unoriented ?x) (keyed ?x) (plain ?x))
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down
    :parameters (?x)
    :precondition (and (holding ?x))
    :effect (and (ontable ?x) (clear ?x) (handempty) (not (holding ?x))))
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y) (plain ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action stack-aligned
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y) (keyed ?y) (oriented ?x))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty))))
  (:action rotate
    :parameters (?x)
    :precondition (and (holding ?x) (unoriented ?x))
    :effect (and (oriented ?x) (not (unoriented ?x))))
  (:action rotate-back
    :parameters (?x)
    :precondition (and (holding ?x) (oriented ?x))
    :effect (and (unoriented ?x) (not (oriented ?x)))))
)";

inline constexpr std::string_view kReorganizeRoom = R"((define (domain reorganize-room)
  (:requirements :strips :typing)
  (:types furniture item - object
          box - item)
  (:predicates (robot-at ?f - furniture) (on ?i - item ?f - furniture) (in ?i - item ?b - box)
               (holding ?i - item) (handempty))
  (:action move
    :parameters (?from - furniture ?to - furniture)
    :precondition (and (robot-at ?from))
    :effect (and (robot-at ?to) (not (robot-at ?from))))
  (:action pick
    :parameters (?i - item ?f - furniture)
    :precondition (and (robot-at ?f) (on ?i ?f) (handempty))
    :effect (and (holding ?i) (not (on ?i ?f)) (not (handempty))))
  (:action place
    :parameters (?i - item ?f - furniture)
    :precondition (and (robot-at ?f) (holding ?i))
    :effect (and (on ?i ?f) (handempty) (not (holding ?i))))
  (:action pack
    :parameters (?i - item ?b - box ?f - furniture)
    :precondition (and (robot-at ?f) (holding ?i) (on ?b ?f))
    :effect (and (in ?i ?b) (handempty) (not (holding ?i))))
  (:action unpack
    :parameters (?i - item ?b - box ?f - furniture)
    :precondition (and (robot-at ?f) (on ?b ?f) (in ?i ?b) (handempty))
    :effect (and (holding ?i) (not (in ?i ?b)) (not (handempty)))))
)";

// Parts sit loose at stations or are mounted onto one another (one part on
// top of each part), so assemblies are built bottom-up.
inline constexpr std::string_view kMachinePartsAssembly = R"((define (domain machine-parts-assembly)
  (:requirements :strips :typing)
  (:types station part - object)
  (:predicates (robot-at ?s - station) (located ?p - part ?s - station) (loose ?p - part)
               (clear ?p - part) (mounted ?p - part ?q - part) (holding ?p - part) (handempty))
  (:action move
    :parameters (?from - station ?to - station)
    :precondition (and (robot-at ?from))
    :effect (and (robot-at ?to) (not (robot-at ?from))))
  (:action pick
    :parameters (?p - part ?s - station)
    :precondition (and (robot-at ?s) (located ?p ?s) (loose ?p) (clear ?p) (handempty))
    :effect (and (holding ?p) (not (located ?p ?s)) (not (loose ?p)) (not (clear ?p)) (not (handempty))))
  (:action place
    :parameters (?p - part ?s - station)
    :precondition (and (robot-at ?s) (holding ?p))
    :effect (and (located ?p ?s) (loose ?p) (clear ?p) (handempty) (not (holding ?p))))
  (:action mount
    :parameters (?p - part ?q - part ?s - station)
    :precondition (and (robot-at ?s) (holding ?p) (located ?q ?s) (clear ?q))
    :effect (and (mounted ?p ?q) (located ?p ?s) (clear ?p) (handempty) (not (holding ?p)) (not (clear ?q))))
  (:action dismount
    :parameters (?p - part ?q - part ?s - station)
    :precondition (and (robot-at ?s) (mounted ?p ?q) (located ?p ?s) (clear ?p) (handempty))
    :effect (and (holding ?p) (clear ?q) (not (mounted ?p ?q)) (not (located ?p ?s)) (not (clear ?p))
                 (not (handempty)))))
)";

inline constexpr std::string_view kPrepareExperiment = R"((define (domain prepare-experiment)
  (:requirements :strips :typing)
  (:types bench equipment - object)
  (:predicates (robot-at ?b - bench) (on ?e - equipment ?b - bench) (installed ?e - equipment ?b - bench)
               (holding ?e - equipment) (handempty))
  (:action move
    :parameters (?from - bench ?to - bench)
    :precondition (and (robot-at ?from))
    :effect (and (robot-at ?to) (not (robot-at ?from))))
  (:action pick
    :parameters (?e - equipment ?b - bench)
    :precondition (and (robot-at ?b) (on ?e ?b) (handempty))
    :effect (and (holding ?e) (not (on ?e ?b)) (not (handempty))))
  (:action place
    :parameters (?e - equipment ?b - bench)
    :precondition (and (robot-at ?b) (holding ?e))
    :effect (and (on ?e ?b) (handempty) (not (holding ?e))))
  (:action setup
    :parameters (?e - equipment ?b - bench)
    :precondition (and (robot-at ?b) (holding ?e))
    :effect (and (installed ?e ?b) (handempty) (not (holding ?e))))
  (:action teardown
    :parameters (?e - equipment ?b - bench)
    :precondition (and (robot-at ?b) (installed ?e ?b) (handempty))
    :effect (and (holding ?e) (not (installed ?e ?b)) (not (handempty)))))
)";

namespace detail {

// Splits a comma-separated list, hyphenates inner spaces and drops repeats
// while keeping first-occurrence order.
inline std::vector<std::string> vocab(std::string_view csv) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t end = csv.find(',', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string w(csv.substr(pos, end - pos));
    w.erase(0, w.find_first_not_of(" \n"));
    w.erase(w.find_last_not_of(" \n") + 1);
    std::replace(w.begin(), w.end(), ' ', '-');
    if (!w.empty() && seen.insert(w).second) out.push_back(w);
    pos = end + 1;
  }
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& housekeeping_objects() {
  static const auto v = detail::vocab(
      "shoebox, book, towel, cushion, pillow, blanket, toyblock, jar, canister, bin, basket, tilepack, box, "
      "storagebox, detergent, soapbar, tissuebox, magazine, photoalbum, cuttingboard, foodbox, ricebag, flourbag, "
      "sugarbag, spicejar, candle, cup, plate, pot, pan, tray, bucket, stepbox, organizer, toybox, craftbox, "
      "sewingbox, pillowbox, laundrybox, clothbag, storagecrate, hamper, cushionbox, shelfbox, matpack, drivecase, "
      "clipboard, penbox, pencilbox, markerbox, staplebox, tape, tapeholder, calendar, planner, report, "
      "documentbox, letterbox, envelopebox, badgebox, tagbox, cardbox, stampbox, inkpad, paperroll, chartbook, "
      "whiteboard, pinboard, notepad, scrapbook, catalog, supplybox, lunchbox, laptopbox, headsetcase, monitorbox, "
      "keyboardbox, mousebox, cablebox, dockbox, shoes, slippers, sandals, boots, books, magazines, notebooks, "
      "comics, albums, photoalbums, towels, napkins, blankets, pillows, cushions, plates, bowls, cups, glasses, "
      "mugs, cutlery, forks, spoons, knives, chopsticks, spicejars, condiments, cerealboxes, snackpacks, bottles, "
      "jars, cans, storagebins, shoeboxes, laundrybaskets, soapbars, detergents, shampoos, conditioners, lotions, "
      "toothbrushes, toothpastes, razors, combs, brushes, hats, scarves, belts, ties, gloves");
  return v;
}

inline const std::vector<std::string>& factory_objects() {
  static const auto v = detail::vocab(
      "pallet, crate, ingot, brick, block, mold, drum, barrel, tray, spool, battery, foam, plate, rod, beam, sheet, "
      "coil, carton, gearbox, motor, casing, bearingbox, brickpack, cablebox, metalbox, plasticbin, boltpail, "
      "nutbox, washerbox, pipebundle, timber, lumber, steelbar, rebar, partbox, panel, duct, filterbox, container, "
      "powderbag, sack, clampbox, toolkit, spacerblock, fastenerbox, weldrod, fixture, drillbox, pallets, crates, "
      "bricks, blocks, beams, pipes, rods, bars, rebars, sheets, panels, plates, coils, rolls, cylinders, drums, "
      "barrels, containers, boxes, cartons, bolts, nuts, washers, screws, clamps, wrenches, spanners, drills, "
      "toolbits, sockets, filters, gaskets, valves, hoses, cables, chains, belts, wheels, gears, motors, casings, "
      "bearings, molds, fixtures, frames, foampads, straps, seals, packaging, labels");
  return v;
}

inline const std::vector<std::string>& lab_objects() {
  static const auto v = detail::vocab(
      "rack, cylinder, labbox, carton, container, samplebox, tipbox, cryobox, pack, dish, slidebox, capsule, pouch, "
      "filterbox, tray, case, testbox, bufferbox, kit, bag, tubecrate, platebox, mediumbottle, sealbag, gelbox, "
      "reagentbox, chipbox, cellbox, rackbox, capbox, powderjar, acidbottle, solventcan, stockbottle, samplejar, "
      "drybox, packtube, enzymebox, coolerbox, chemcart, bottles, beakers, flasks, cylinders, vials, tubes, "
      "testtubes, petri, slides, racks, tipboxes, cryoboxes, samplebags, pipettes, pipettips, dishes, capsules, "
      "ampoules, filters, funnels, gloves, masks, goggles, aprons, coats, notebooks, pens, labels, markers, tags, "
      "trays, cases, carts, stands, supports, boxes, containers, jars, pouches, packs, media, solutions, buffers, "
      "reagents, kits, cells, chips, plates, serums, enzymes");
  return v;
}

inline const std::vector<std::string>& housekeeping_furniture() {
  static const auto v = detail::vocab(
      "dining table, coffee table, side table, console table, end table, bedside table, kitchen table, foldable "
      "table, picnic table, patio table, round table, square table, rectangular table, buffet table, sofa table, "
      "low table, tea table, serving table, bench table, counter table, island table, tv stand, hall table, "
      "display table, exhibit table, study desk, writing desk, computer desk, standing desk, reception desk, "
      "conference table, meeting table, office table, printer stand, workstation, drafting table, blueprint table");
  return v;
}

inline const std::vector<std::string>& factory_furniture() {
  static const auto v = detail::vocab(
      "workbench, assembly table, packing table, utility table, sorting table, assembly bench, grinding table");
  return v;
}

inline const std::vector<std::string>& lab_furniture() {
  static const auto v =
      detail::vocab("lab bench, lab table, specimen table, experiment bench, fume table, inspection table");
  return v;
}

// Housekeeping objects that act as containers in reorganize-room.
inline bool is_container_name(std::string_view n) {
  for (std::string_view suffix : {"box", "bin", "basket", "crate", "hamper", "bag", "bins", "boxes", "baskets"})
    if (n.size() >= suffix.size() && n.substr(n.size() - suffix.size()) == suffix) return true;
  return false;
}

}  // namespace planforge::domains
