// Browser bootstrap: session, hash routing, and event wiring. All feature
// logic lives in the pure modules; this file only glues them to the DOM.

import { ApiClient, ApiError, sha1Hex } from "./api.js";
import { adminRole, visibleScreens } from "./screens.js";
import type { Capabilities, SessionState, Taxonomy, User } from "./types.js";
import {
  bibliometricsPanel,
  consensusPanel,
  escapeHtml,
  evaluationCard,
  moderationCard,
  navView,
  notAvailable,
  ratingWidget,
  recordCard,
  submissionForm,
  taxonomyBrowser,
} from "./views.js";

const BASE_URL =
  new URLSearchParams(window.location.search).get("api") ??
  localStorage.getItem("revbib.baseUrl") ??
  window.location.origin;

const api = new ApiClient(BASE_URL, localStorage.getItem("revbib.token"));

const session: SessionState = {
  token: localStorage.getItem("revbib.token"),
  user: null,
  capabilities: null as unknown as Capabilities,
  areaId: localStorage.getItem("revbib.areaId"),
};

let taxonomy: Taxonomy | null = null;

function root(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

function setToken(token: string | null, user: User | null): void {
  session.token = token;
  session.user = user;
  api.setToken(token);
  if (token) {
    localStorage.setItem("revbib.token", token);
  } else {
    localStorage.removeItem("revbib.token");
  }
}

function flash(message: string, kind: "error" | "info" = "info"): void {
  const el = document.getElementById("flash");
  if (!el) return;
  el.textContent = message;
  el.className = `flash ${kind}`;
  setTimeout(() => {
    el.textContent = "";
    el.className = "flash";
  }, 6000);
}

async function guard<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiError) {
      flash(err.displayMessage, "error");
      if (err.status === 401) {
        setToken(null, null);
        window.location.hash = "#/login";
      }
      return null;
    }
    throw err;
  }
}

function layout(contentHtml: string): void {
  const screens = visibleScreens(session);
  root().innerHTML = `
    ${navView(session, screens)}
    <div id="flash" class="flash"></div>
    <main>${contentHtml}</main>`;
}

// ---- screens ---------------------------------------------------------------

async function showLogin(register = false): Promise<void> {
  const title = register ? "Register" : "Sign in";
  const extra = register
    ? `<label>Email <input name="email" type="email" required></label>
       <label>First name <input name="first_name"></label>
       <label>Last name <input name="last_name"></label>`
    : "";
  const swap = register
    ? `<a href="#/login">sign in instead</a>`
    : `<a href="#/register">register instead</a>`;
  root().innerHTML = `
    <header><h1>revbib</h1></header>
    <div id="flash" class="flash"></div>
    <main>
      <form id="auth-form" class="auth">
        <h2>${title}</h2>
        <label>Username <input name="username" required></label>
        <label>Password <input name="password" type="password" required></label>
        ${extra}
        <button type="submit">${title}</button>
        <p>${swap}</p>
      </form>
    </main>`;
  const form = document.getElementById("auth-form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const username = String(data.get("username"));
    const digest = await sha1Hex(String(data.get("password")));
    await guard(async () => {
      if (register) {
        await api.register({
          username,
          password_digest: digest,
          email: String(data.get("email")),
          first_name: String(data.get("first_name") ?? ""),
          last_name: String(data.get("last_name") ?? ""),
        });
      }
      const login = await api.login(username, digest);
      setToken(login.token, login.user);
      window.location.hash = "#/";
      await route();
    });
  });
}

async function loadTaxonomy(): Promise<Taxonomy | null> {
  if (!session.areaId) return null;
  if (taxonomy && taxonomy.area_id === session.areaId) return taxonomy;
  const body = await guard(() => api.taxonomy(session.areaId as string));
  taxonomy = body?.taxonomy ?? null;
  return taxonomy;
}

function bindRatingWidgets(): void {
  document.querySelectorAll<HTMLFormElement>(".rating-widget").forEach((form) => {
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const recordId = form.dataset.recordId as string;
      const quality = form.querySelector<HTMLInputElement>(
        `input[name="quality-${recordId}"]:checked`,
      )?.value;
      const familiarity = form.querySelector<HTMLInputElement>(
        `input[name="familiarity-${recordId}"]:checked`,
      )?.value;
      if (!quality || !familiarity) {
        flash("pick one option on each scale", "error");
        return;
      }
      const body = await guard(() =>
        api.rate(session.areaId as string, recordId, Number(quality), Number(familiarity)),
      );
      if (body) {
        flash(
          `overall score ${body.score.score_display}% from ${body.score.rating_count} rating(s)`,
        );
        await route();
      }
    });
  });
}

async function showHome(): Promise<void> {
  if (!session.areaId) {
    const areas = session.capabilities.areas;
    const cards = areas
      .map(
        (a) =>
          `<button class="area-pick" data-area="${a.area_id}">${escapeHtml(a.name)}</button>`,
      )
      .join("");
    layout(`<h2>Pick a science area</h2><div class="areas">${cards}</div>`);
    document.querySelectorAll<HTMLButtonElement>(".area-pick").forEach((btn) => {
      btn.addEventListener("click", () => {
        session.areaId = btn.dataset.area as string;
        localStorage.setItem("revbib.areaId", session.areaId);
        void route();
      });
    });
    return;
  }
  layout(`<h2>${escapeHtml(session.areaId)}</h2>
          <p>Pick a screen above. Every feature offered by this deployment is
             at most two clicks away.</p>`);
}

async function showBrowse(fieldId?: string, subfieldId?: string): Promise<void> {
  const tree = await loadTaxonomy();
  if (!tree) return;
  if (!fieldId || !subfieldId) {
    layout(`<h2>Browse</h2>${taxonomyBrowser(tree)}`);
    return;
  }
  const [records, metrics] = await Promise.all([
    guard(() => api.listRecords(session.areaId as string, fieldId, subfieldId)),
    guard(() => api.bibliometrics(session.areaId as string, fieldId, subfieldId)),
  ]);
  if (!records) return;
  const cards = records.records
    .map((r) => recordCard(r, ratingWidget(r.record_id)))
    .join("");
  layout(`
    <h2>${escapeHtml(fieldId)} / ${escapeHtml(subfieldId)}</h2>
    <div class="split">
      <section>${cards || "<p>No approved records yet.</p>"}</section>
      ${metrics ? bibliometricsPanel(metrics.summary as never) : ""}
    </div>`);
  bindRatingWidgets();
}

async function showSearch(): Promise<void> {
  layout(`
    <h2>Search approved review articles</h2>
    <form id="search-form"><input name="q" placeholder="keywords"><button>Search</button></form>
    <div id="search-results"></div>`);
  const form = document.getElementById("search-form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const q = String(new FormData(form).get("q") ?? "");
    const body = await guard(() => api.search(session.areaId ?? "computing", q));
    if (body) {
      const target = document.getElementById("search-results") as HTMLElement;
      target.innerHTML =
        body.results.map((r) => recordCard(r)).join("") || "<p>No matches.</p>";
    }
  });
}

async function showSubmit(): Promise<void> {
  const tree = await loadTaxonomy();
  if (!tree) return;
  layout(`<h2>Submit a review article</h2>${submissionForm(tree)}`);
  const form = document.getElementById("submit-form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const [fieldId, subfieldId] = String(data.get("path")).split("/");
    const draft: Record<string, unknown> = {
      title: String(data.get("title")),
      authors: String(data.get("authors"))
        .split(";")
        .map((a) => a.trim())
        .filter(Boolean),
      venue: String(data.get("venue") ?? ""),
      year: Number(data.get("year")),
      field_id: fieldId,
      subfield_id: subfieldId,
    };
    const keywords = String(data.get("keywords") ?? "")
      .split(",")
      .map((k) => k.trim())
      .filter(Boolean);
    if (keywords.length) draft["keywords"] = keywords;
    const doi = String(data.get("doi") ?? "").trim();
    if (doi) draft["doi"] = doi;
    const abstract = String(data.get("abstract") ?? "").trim();
    if (abstract) draft["abstract"] = abstract;
    const body = await guard(() => api.submitRecord(session.areaId as string, draft));
    if (body) {
      flash(`submitted; status: ${body.record.status}`);
      form.reset();
    }
  });
}

async function showRecommendations(): Promise<void> {
  const body = await guard(() => api.recommendations(session.areaId as string));
  if (!body) return;
  const cards = body.recommendations
    .map((item) => recordCard(item.record))
    .join("");
  layout(`<h2>Recommended for you</h2>${cards || notAvailable("Rate some articles first; recommendations come from your ratings.")}`);
}

async function showEvaluationQueue(): Promise<void> {
  const tree = await loadTaxonomy();
  if (!tree) return;
  const body = await guard(() => api.pending(session.areaId as string, "evaluation"));
  if (!body) return;
  const cards = body.records.map((r) => evaluationCard(r, tree)).join("");
  layout(`<h2>Pending evaluation</h2>${cards || "<p>Nothing awaits evaluation.</p>"}`);
  document.querySelectorAll<HTMLFormElement>(".evaluation-card").forEach((form) => {
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const recordId = form.dataset.recordId as string;
      const verdict = form.querySelector<HTMLInputElement>(
        `input[name="verdict-${recordId}"]:checked`,
      )?.value;
      if (!verdict) {
        flash("choose whether this is a review/survey article", "error");
        return;
      }
      const isReview = verdict === "true";
      const path = form.querySelector<HTMLSelectElement>(
        `select[name="path-${recordId}"]`,
      )?.value;
      const [fieldId, subfieldId] = (path ?? "/").split("/");
      const body = await guard(() =>
        api.evaluate(
          session.areaId as string,
          recordId,
          isReview,
          isReview ? fieldId : null,
          isReview ? subfieldId : null,
        ),
      );
      if (body) {
        flash(
          `recorded; consensus ${body.decision.outcome} ` +
            `(support ${body.decision.supporting_count}); record ${body.record_status}`,
        );
        await route();
      }
    });
  });
}

async function showModerationQueue(): Promise<void> {
  const body = await guard(() => api.pending(session.areaId as string, "moderation"));
  if (!body) return;
  const canOpen = Boolean(session.capabilities.functionality["U6"]?.supported);
  const cards = body.records.map((r) => moderationCard(r, canOpen)).join("");
  const evalBody = canOpen
    ? await guard(() => api.pending(session.areaId as string, "evaluation"))
    : null;
  let evalSection = "";
  if (evalBody && evalBody.records.length && !session.capabilities.auto_decide) {
    const withTallies = await Promise.all(
      evalBody.records.map(async (r) => {
        const status = await guard(() =>
          api.consensus(session.areaId as string, r.record_id),
        );
        return moderationCard(r, false, status ? consensusPanel(status) : "");
      }),
    );
    evalSection = `<h3>Under evaluation (tally shown; decision is yours)</h3>${withTallies.join("")}`;
  }
  layout(`<h2>Moderation queue</h2>${cards || "<p>Queue is empty.</p>"}${evalSection}`);
  document.querySelectorAll<HTMLElement>(".decision-buttons").forEach((panel) => {
    panel.querySelectorAll("button").forEach((button) => {
      button.addEventListener("click", async () => {
        const action = button.dataset.action as string;
        const reason =
          action === "reject" ? prompt("Rejection reason (optional)") ?? "" : undefined;
        const body = await guard(() =>
          api.decide(
            session.areaId as string,
            panel.dataset.recordId as string,
            action,
            reason,
          ),
        );
        if (body) {
          flash(`record is now ${body.record.status}`);
          await route();
        }
      });
    });
  });
}

async function showTaxonomyAdmin(): Promise<void> {
  const tree = await loadTaxonomy();
  if (!tree) return;
  const fields = tree.fields
    .map((f) => `<option value="${f.field_id}">${escapeHtml(f.name)}</option>`)
    .join("");
  layout(`
    <h2>Manage taxonomy</h2>
    ${taxonomyBrowser(tree)}
    <form id="add-subfield">
      <h3>Add a sub-field</h3>
      <label>Field <select name="field">${fields}</select></label>
      <label>Name <input name="name" required></label>
      <button type="submit">Add</button>
    </form>`);
  const form = document.getElementById("add-subfield") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const body = await guard(() =>
      api.addSubfield(
        session.areaId as string,
        String(data.get("field")),
        String(data.get("name")),
      ),
    );
    if (body) {
      taxonomy = body.taxonomy;
      flash("sub-field added");
      await route();
    }
  });
}

async function showProfile(): Promise<void> {
  const user = session.user;
  if (!user) return;
  layout(`
    <h2>Profile</h2>
    <p>${escapeHtml(user.username)} · ${escapeHtml(user.email)} · role ${escapeHtml(user.role)}</p>
    <button id="logout">Sign out</button>`);
  document.getElementById("logout")?.addEventListener("click", () => {
    setToken(null, null);
    window.location.hash = "#/login";
    void route();
  });
}

// ---- router ------------------------------------------------------------------

async function route(): Promise<void> {
  const hash = window.location.hash || "#/";
  if (!session.token && hash !== "#/register") {
    await showLogin(false);
    return;
  }
  if (hash === "#/register") {
    await showLogin(true);
    return;
  }
  if (!session.user) {
    const me = await guard(() => api.profile());
    if (!me) return;
    session.user = me.user;
  }
  const allowed = new Set(visibleScreens(session).map((s) => s.hash));
  const parts = hash.slice(2).split("/");
  switch (parts[0]) {
    case "":
      await showHome();
      break;
    case "search":
      await showSearch();
      break;
    case "browse":
      await showBrowse(parts[1], parts[2]);
      break;
    case "submit":
      allowed.has("#/submit") ? await showSubmit() : await showHome();
      break;
    case "recommendations":
      await showRecommendations();
      break;
    case "evaluate":
      allowed.has("#/evaluate") ? await showEvaluationQueue() : await showHome();
      break;
    case "moderate":
      allowed.has("#/moderate") ? await showModerationQueue() : await showHome();
      break;
    case "taxonomy":
      allowed.has("#/taxonomy") ? await showTaxonomyAdmin() : await showHome();
      break;
    case "profile":
      await showProfile();
      break;
    default:
      await showHome();
  }
}

async function boot(): Promise<void> {
  // the capability matrix decides everything the client renders; a scenario
  // change on the server reshapes the UI on the next reload, no rebuild
  session.capabilities = await api.capabilities();
  if (!session.areaId && session.capabilities.areas.length === 1) {
    session.areaId = session.capabilities.areas[0].area_id;
  }
  window.addEventListener("hashchange", () => void route());
  await route();
}

void boot();

// referenced so bundling keeps the helper for the console
export { adminRole };
