/**
 * Client-side model of the world document served at /world.
 *
 * The map is a flat graph of locations grouped into areas; the client
 * renders it top-down and turns clicks on locations into move commands.
 */

export interface WorldObjectDoc {
  id: string;
  label: string;
  actions: string[];
  choice_options?: string[];
}

export interface LocationDoc {
  id: string;
  label: string;
  objects: WorldObjectDoc[];
}

export interface DistractorPointDoc {
  id: string;
  location_id: string;
  game_kind: string;
}

export interface AreaDoc {
  id: string;
  label: string;
  locations: LocationDoc[];
  distractor_points: DistractorPointDoc[];
}

export interface NpcDoc {
  id: string;
  label: string;
  actions: string[];
  choice_options?: string[];
  presence: { location_id: string; from: string; to: string }[];
}

export interface WorldDoc {
  areas: AreaDoc[];
  edges: [string, string, number][];
  npcs: NpcDoc[];
}

export interface MapLocation {
  id: string;
  label: string;
  areaId: string;
  objects: WorldObjectDoc[];
  neighbors: { id: string; minutes: number }[];
  distractorPoint: DistractorPointDoc | null;
}

export interface MapModel {
  locations: Map<string, MapLocation>;
  objects: Map<string, WorldObjectDoc & { locationId: string }>;
  npcs: Map<string, NpcDoc>;
  areaLabels: Map<string, string>;
}

export function buildMapModel(doc: WorldDoc): MapModel {
  const locations = new Map<string, MapLocation>();
  const objects = new Map<string, WorldObjectDoc & { locationId: string }>();
  const areaLabels = new Map<string, string>();
  for (const area of doc.areas) {
    areaLabels.set(area.id, area.label);
    const points = new Map(
      area.distractor_points.map((p) => [p.location_id, p]),
    );
    for (const loc of area.locations) {
      locations.set(loc.id, {
        id: loc.id,
        label: loc.label,
        areaId: area.id,
        objects: loc.objects,
        neighbors: [],
        distractorPoint: points.get(loc.id) ?? null,
      });
      for (const obj of loc.objects) {
        objects.set(obj.id, { ...obj, locationId: loc.id });
      }
    }
  }
  for (const [a, b, minutes] of doc.edges) {
    locations.get(a)?.neighbors.push({ id: b, minutes });
    locations.get(b)?.neighbors.push({ id: a, minutes });
  }
  const npcs = new Map(doc.npcs.map((n) => [n.id, n]));
  return { locations, objects, npcs, areaLabels };
}

// ---------------------------------------------------------------------
// labels

export type LabelLanguage = "en" | "ja";

// The world document ships English labels; the Japanese overlay is a
// client-side dictionary with English fallback for unknown ids.
const JA_LABELS: Record<string, string> = {
  home: "自宅",
  street: "商店街",
  bedroom: "寝室",
  living_room: "リビング",
  kitchen: "台所",
  bathroom: "浴室",
  entrance: "玄関",
  street_corner: "街角",
  plaza: "広場",
  shopping_street: "商店通り",
  convenience_store: "コンビニ",
  dry_cleaner: "クリーニング店",
  post_office: "郵便局",
  medicine_box: "薬箱",
  bath: "風呂",
  front_door: "玄関のドア",
  flower_pot: "植木鉢",
  cat_bowl: "猫の皿",
  telephone: "電話",
  dining_table: "食卓",
  rice_cooker: "炊飯器",
  futon: "布団",
  tv: "テレビ",
  umbrella: "傘",
  atm: "ATM",
  bench: "ベンチ",
  grocery_shelf: "食品棚",
  flower_stand: "花屋の店先",
  cleaner_counter: "受付カウンター",
  parcel_counter: "窓口",
};

export function labelFor(
  id: string,
  fallback: string,
  lang: LabelLanguage,
): string {
  if (lang === "ja") {
    return JA_LABELS[id] ?? fallback;
  }
  return fallback;
}
