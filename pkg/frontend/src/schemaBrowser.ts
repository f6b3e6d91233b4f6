import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { SessionState } from "./state.js";

export interface SchemaBrowser {
  readonly select: HTMLSelectElement;
  /** Resolves once the current schema fetch (if any) has settled. */
  whenIdle(): Promise<void>;
}

/** Database picker + table/column explorer.
 *
 * Clicking a column name hands it to onColumnClick so the question box
 * can insert it; an unknown database shows the server's error banner.
 */
export function createSchemaBrowser(
  container: HTMLElement,
  api: ApiClient,
  state: SessionState,
  onColumnClick: (name: string) => void,
  onDbChange: () => void = () => undefined,
): SchemaBrowser {
  const doc = container.ownerDocument;
  const select = doc.createElement("select");
  select.className = "db-select";
  const banner = doc.createElement("div");
  banner.className = "error-banner";
  banner.hidden = true;
  const detail = doc.createElement("div");
  detail.className = "schema-detail";
  container.append(select, banner, detail);

  let pending: Promise<void> = Promise.resolve();

  async function showSchema(dbId: string): Promise<void> {
    banner.hidden = true;
    detail.textContent = "";
    try {
      const schema = await api.getSchema(dbId);
      state.dbId = schema.db_id;
      for (const table of schema.tables) {
        const section = doc.createElement("section");
        section.className = "table";
        const h = doc.createElement("h3");
        h.textContent = table.name;
        section.append(h);
        const cols = doc.createElement("ul");
        cols.className = "columns";
        for (const col of table.columns) {
          const li = doc.createElement("li");
          li.className = "column";
          const btn = doc.createElement("button");
          btn.type = "button";
          btn.className = "column-name";
          btn.textContent = col.name;
          btn.addEventListener("click", () => onColumnClick(col.name));
          const ty = doc.createElement("span");
          ty.className = "column-type";
          ty.textContent = col.type;
          li.append(btn, ty);
          cols.append(li);
        }
        section.append(cols);
        if (table.foreign_keys.length > 0) {
          const fks = doc.createElement("ul");
          fks.className = "foreign-keys";
          for (const [local, ftable, fcol] of table.foreign_keys) {
            const li = doc.createElement("li");
            li.textContent = `${table.name}.${local} → ${ftable}.${fcol}`;
            fks.append(li);
          }
          section.append(fks);
        }
        detail.append(section);
      }
      onDbChange();
    } catch (exc) {
      state.dbId = null;
      banner.hidden = false;
      banner.textContent =
        exc instanceof ApiError
          ? `[${exc.stage}] ${exc.message}`
          : `[network] ${String(exc)}`;
      onDbChange();
    }
  }

  select.addEventListener("change", () => {
    pending = showSchema(select.value);
  });

  pending = api
    .listSchemas()
    .then((ids) => {
      for (const id of ids) {
        const opt = doc.createElement("option");
        opt.value = id;
        opt.textContent = id;
        select.append(opt);
      }
      const first = ids[0];
      if (first !== undefined) {
        select.value = first;
        return showSchema(first);
      }
      return undefined;
    })
    .catch((exc) => {
      banner.hidden = false;
      banner.textContent = `[network] ${String(exc)}`;
    });

  return { select, whenIdle: () => pending };
}
