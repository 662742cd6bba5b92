// The entire feature surface derives from the server's capability matrix and
// the session's role: a functionality the deployment does not offer has no
// screen at all, and privileged queues exist only for the matching role.

import type { Capabilities, SessionState } from "./types.js";

export type Screen =
  | "search"
  | "browse"
  | "submit"
  | "recommendations"
  | "evaluation-queue"
  | "moderation-queue"
  | "taxonomy-admin"
  | "profile";

export interface ScreenSpec {
  id: Screen;
  title: string;
  hash: string;
  functionality: string | null;
}

const ALL_SCREENS: ScreenSpec[] = [
  { id: "search", title: "Search", hash: "#/search", functionality: null },
  { id: "browse", title: "Browse sub-fields", hash: "#/browse", functionality: "U2" },
  { id: "submit", title: "Submit an article", hash: "#/submit", functionality: "U1" },
  {
    id: "recommendations",
    title: "Recommended for you",
    hash: "#/recommendations",
    functionality: "U5",
  },
  {
    id: "evaluation-queue",
    title: "Evaluate pending articles",
    hash: "#/evaluate",
    functionality: "U6",
  },
  {
    id: "moderation-queue",
    title: "Moderation queue",
    hash: "#/moderate",
    functionality: "A1",
  },
  {
    id: "taxonomy-admin",
    title: "Manage taxonomy",
    hash: "#/taxonomy",
    functionality: "A3",
  },
  { id: "profile", title: "Profile", hash: "#/profile", functionality: null },
];

function supported(caps: Capabilities, key: string): boolean {
  return Boolean(caps.functionality[key]?.supported);
}

/** Role that may manage taxonomies in this deployment (A3/A4 note-driven). */
export function adminRole(caps: Capabilities): string {
  const note = caps.functionality["A3"]?.note ?? "";
  return note.includes("associate") ? "associate_user" : "moderator";
}

export function visibleScreens(session: SessionState): ScreenSpec[] {
  const caps = session.capabilities;
  const role = session.user?.role ?? "user";
  return ALL_SCREENS.filter((screen) => {
    if (screen.functionality !== null && !supported(caps, screen.functionality)) {
      return false;
    }
    if (screen.id === "moderation-queue" && role !== "moderator") {
      return false;
    }
    if (screen.id === "taxonomy-admin" && role !== adminRole(caps)) {
      return false;
    }
    return true;
  });
}

export function screenIds(session: SessionState): Screen[] {
  return visibleScreens(session).map((s) => s.id);
}
