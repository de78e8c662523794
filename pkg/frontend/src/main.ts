// Bootstrap: landing form (connect to a server, open or create a session),
// then hand the main region to the controller.

import { ApiClient } from "./api.js";
import { AppController } from "./controller.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export function boot(): void {
  const landing = byId<HTMLElement>("landing");
  const appRoot = byId<HTMLElement>("app");

  byId<HTMLButtonElement>("open-button").addEventListener("click", async () => {
    const api = new ApiClient(byId<HTMLInputElement>("server-url").value.trim());
    const controller = new AppController(appRoot, api);
    landing.hidden = true;
    await controller.openSession(byId<HTMLInputElement>("session-id").value.trim());
  });

  byId<HTMLButtonElement>("create-button").addEventListener("click", async () => {
    const api = new ApiClient(byId<HTMLInputElement>("server-url").value.trim());
    const controller = new AppController(appRoot, api);
    const population = byId<HTMLInputElement>("create-population").value.trim();
    landing.hidden = true;
    await controller.createSession({
      dataset_path: byId<HTMLInputElement>("create-dataset").value.trim(),
      epsilon: Number(byId<HTMLInputElement>("create-epsilon").value),
      delta: Number(byId<HTMLInputElement>("create-delta").value),
      ...(population === "" ? {} : { population_size: Number(population) }),
    });
  });
}

if (typeof document !== "undefined" && document.getElementById("landing")) {
  boot();
}
